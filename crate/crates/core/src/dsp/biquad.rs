//! Second-order IIR sections (direct form I).

use crate::real::Real;

/// One biquad stage. `a0` is implicitly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<R: Real> {
    pub b0: R,
    pub b1: R,
    pub b2: R,
    pub a1: R,
    pub a2: R,
    x1: R,
    x2: R,
    y1: R,
    y2: R,
}

impl<R: Real> Biquad<R> {
    pub fn new(b0: R, b1: R, b2: R, a1: R, a2: R) -> Self {
        Self {
            b0,
            b1,
            b2,
            a1,
            a2,
            x1: R::zero(),
            x2: R::zero(),
            y1: R::zero(),
            y2: R::zero(),
        }
    }

    /// Build a section from real zeros `z1, z2` and real poles `p1, p2`.
    pub fn from_zeros_poles(z1: f64, z2: f64, p1: f64, p2: f64) -> Self {
        Self::new(
            R::one(),
            R::from_f64_c(-(z1 + z2)),
            R::from_f64_c(z1 * z2),
            R::from_f64_c(-(p1 + p2)),
            R::from_f64_c(p1 * p2),
        )
    }

    /// Second-order Butterworth bandpass with -3 dB edges at `lo_hz` and
    /// `hi_hz`, unity gain at the geometric center. Edges are prewarped.
    pub fn bandpass(sample_rate: u32, lo_hz: f64, hi_hz: f64) -> Self {
        let fs = f64::from(sample_rate);
        let k = 2.0 * fs;
        let warp = |f: f64| k * (std::f64::consts::PI * f / fs).tan();
        let (wl, wh) = (warp(lo_hz), warp(hi_hz));
        let w0_sq = wl * wh;
        let bw = wh - wl;
        let a0 = k * k + bw * k + w0_sq;
        Self::new(
            R::from_f64_c(bw * k / a0),
            R::zero(),
            R::from_f64_c(-bw * k / a0),
            R::from_f64_c((2.0 * w0_sq - 2.0 * k * k) / a0),
            R::from_f64_c((k * k - bw * k + w0_sq) / a0),
        )
    }

    #[inline(always)]
    pub fn process(&mut self, x0: R) -> R {
        let y0 = self.b0 * x0 + self.b1 * self.x1 + self.b2 * self.x2
            - self.a1 * self.y1
            - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x0;
        self.y2 = self.y1;
        self.y1 = y0;
        y0
    }

    pub fn reset(&mut self) {
        self.x1 = R::zero();
        self.x2 = R::zero();
        self.y1 = R::zero();
        self.y2 = R::zero();
    }

    /// Squared magnitude response at normalized angular frequency `theta`
    /// (radians per sample), evaluated in `f64`.
    pub fn magnitude_sq(&self, theta: f64) -> f64 {
        let (c1, s1) = (theta.cos(), theta.sin());
        let (c2, s2) = ((2.0 * theta).cos(), (2.0 * theta).sin());
        let nre = self.b0.as_f64() + self.b1.as_f64() * c1 + self.b2.as_f64() * c2;
        let nim = -(self.b1.as_f64() * s1 + self.b2.as_f64() * s2);
        let dre = 1.0 + self.a1.as_f64() * c1 + self.a2.as_f64() * c2;
        let dim = -(self.a1.as_f64() * s1 + self.a2.as_f64() * s2);
        (nre * nre + nim * nim) / (dre * dre + dim * dim)
    }
}
