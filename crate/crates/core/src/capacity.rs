//! Gaussian-uplink rate algebra for one source heard by a relay and a
//! destination, with the relay forwarding at power split alpha.
//!
//! For source power P, relay forward power P1, relay noise N1 and extra
//! destination noise N2 (all linear scale), the three rates in bits per use
//! are
//!
//!   r_plus  = 1/2 log2(1 + alpha P / N1)
//!   r_one   = 1/2 log2(1 + (sqrt(P1) + sqrt((1-alpha) P))^2 / (alpha P + N1 + N2))
//!   r_minus = 1/2 log2(1 + alpha P / (N1 + N2))
//!
//! r_plus is what the relay can decode, r_one the network-coded part the
//! destination recovers with the relay's help, r_minus the directly decoded
//! remainder. The end-to-end rate is min(r_plus, r_one + r_minus);
//! `optimize_alpha` balances the two terms.

use crate::error::{Error, Result};
use crate::mi::JKind;
use serde::Serialize;

fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / std::f64::consts::LN_2
}

/// One source-relay-destination link. `alpha` in [0, 1] is the fraction of
/// the source power the destination treats as directly decodable.
#[derive(Debug, Clone, Copy)]
pub struct RelayLinkParams {
    pub p: f64,
    pub p1: f64,
    pub n1: f64,
    pub n2: f64,
    pub alpha: f64,
}

impl RelayLinkParams {
    pub fn new(p: f64, p1: f64, n1: f64, n2: f64, alpha: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("source power must be > 0, got {p}")));
        }
        if !(p1 >= 0.0) || !p1.is_finite() {
            return Err(Error::Domain(format!(
                "relay power must be >= 0, got {p1}"
            )));
        }
        if !(n1 > 0.0) || !n1.is_finite() {
            return Err(Error::Domain(format!("relay noise must be > 0, got {n1}")));
        }
        if !(n2 >= 0.0) || !n2.is_finite() {
            return Err(Error::Domain(format!(
                "extra destination noise must be >= 0, got {n2}"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must be in [0, 1], got {alpha}")));
        }
        Ok(RelayLinkParams { p, p1, n1, n2, alpha })
    }

    pub fn rates(&self) -> RateTriple {
        let a = self.alpha;
        let r_plus = half_log2_1p(a * self.p / self.n1);
        let boost = (self.p1.sqrt() + ((1.0 - a) * self.p).sqrt()).powi(2);
        let r_one = half_log2_1p(boost / (a * self.p + self.n1 + self.n2));
        let r_minus = half_log2_1p(a * self.p / (self.n1 + self.n2));
        RateTriple { r_plus, r_one, r_minus }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTriple {
    pub r_plus: f64,
    pub r_one: f64,
    pub r_minus: f64,
}

impl RateTriple {
    /// End-to-end achievable rate: the relay must decode (r_plus) and the
    /// destination must recover both parts (r_one + r_minus).
    pub fn achievable(&self) -> f64 {
        self.r_plus.min(self.r_one + self.r_minus)
    }
}

/// Result of the power-split search.
#[derive(Debug, Clone, Copy)]
pub struct AlphaOpt {
    pub alpha: f64,
    pub rate: f64,
    pub rates: RateTriple,
}

/// Maximizes min(r_plus, r_one + r_minus) over alpha in [0, 1].
///
/// r_plus increases in alpha while r_one + r_minus never increases: the sum
/// collapses to 1/2 log2((p + p1 + n1 + n2 + 2 sqrt(p1 p (1-alpha))) / (n1 + n2)).
/// The gap g(alpha) = r_plus - (r_one + r_minus) is therefore increasing,
/// and the optimum sits at its root, or at alpha = 1 when g stays
/// nonpositive (e.g. n2 = 0, where the destination hears everything the
/// relay hears and splitting buys nothing). With p1 = 0 the sum is constant
/// in alpha and every alpha at or past the root is optimal; the root is
/// returned.
pub fn optimize_alpha(p: f64, p1: f64, n1: f64, n2: f64) -> Result<AlphaOpt> {
    let gap = |alpha: f64| {
        let r = RelayLinkParams { p, p1, n1, n2, alpha }.rates();
        r.r_plus - (r.r_one + r.r_minus)
    };
    // Validate the fixed parameters once.
    RelayLinkParams::new(p, p1, n1, n2, 0.0)?;

    let alpha = if gap(1.0) <= 0.0 {
        1.0
    } else {
        // g(0) = -(r_one + r_minus) < 0 < g(1): bisect.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let rates = RelayLinkParams { p, p1, n1, n2, alpha }.rates();
    Ok(AlphaOpt {
        alpha,
        rate: rates.achievable(),
        rates,
    })
}

/// Capacity of the BIAWGN channel with noise std `sigma_ch` and unit-energy
/// antipodal signaling, in bits per use.
pub fn biawgn_capacity(sigma_ch: f64) -> Result<f64> {
    JKind::Quadrature.channel_mi(sigma_ch)
}

/// Noise std at which the BIAWGN capacity equals `rate`: the Shannon limit
/// for that rate. `rate` must lie strictly inside (0, 1).
pub fn shannon_sigma(rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Domain(format!(
            "shannon_sigma needs a rate in (0, 1), got {rate}"
        )));
    }
    // Capacity falls from 1 toward 0 as sigma grows; bracket generously.
    let (mut lo, mut hi) = (1e-3_f64, 1e4_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if biawgn_capacity(mid)? > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
