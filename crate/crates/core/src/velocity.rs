//! Speed laws `V(w)` on densities in `[0, 1]`, the induced flux
//! `f(u) = u V(u)`, and the entropy pairs used by the dissipation
//! diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the speed law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum VelocityFamily {
    /// `V(w) = 1 - w`.
    Greenshields,
    /// Linear interpolation of a non-increasing sample table over `[0, 1]`.
    Custom { table: Vec<(f64, f64)> },
}

/// A Lipschitz, non-increasing speed law together with cached constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityModel {
    pub family: VelocityFamily,
    /// Upper bound on `|V'|`.
    pub lip_const: f64,
    /// Upper bound on `|V|` over `[0, 1]`.
    pub max_abs_v: f64,
    /// Smallest value of `V` over `[0, 1]`; negative lanes are routed to the
    /// dissipative fallback scheme by the solver.
    pub min_v: f64,
}

impl VelocityModel {
    pub fn greenshields() -> Self {
        VelocityModel {
            family: VelocityFamily::Greenshields,
            lip_const: 1.0,
            max_abs_v: 1.0,
            min_v: 0.0,
        }
    }

    /// Speed law from `(u, V(u))` samples. The table must cover `[0, 1]`
    /// with strictly increasing `u` and non-increasing `V`.
    pub fn custom(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Domain("speed table needs at least two samples".into()));
        }
        if table[0].0 != 0.0 || table.last().unwrap().0 != 1.0 {
            return Err(Error::Domain("speed table must span u in [0, 1]".into()));
        }
        let mut lip: f64 = 0.0;
        for pair in table.windows(2) {
            let (u0, v0) = pair[0];
            let (u1, v1) = pair[1];
            if !(u1 > u0) {
                return Err(Error::Domain("speed table must be strictly increasing in u".into()));
            }
            if v1 > v0 + 1e-12 {
                return Err(Error::Domain(format!(
                    "speed law must be non-increasing; rises from {v0} to {v1} at u = {u1}"
                )));
            }
            lip = lip.max((v1 - v0).abs() / (u1 - u0));
        }
        if table.iter().any(|(u, v)| !u.is_finite() || !v.is_finite()) {
            return Err(Error::Domain("speed table contains non-finite entries".into()));
        }
        let max_abs = table.iter().map(|(_, v)| v.abs()).fold(0.0f64, f64::max);
        let min_v = table.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        Ok(VelocityModel { family: VelocityFamily::Custom { table }, lip_const: lip, max_abs_v: max_abs, min_v })
    }

    /// Speed at density `w`, for `w` in `[0, 1]`.
    pub fn v(&self, w: f64) -> f64 {
        match &self.family {
            VelocityFamily::Greenshields => 1.0 - w,
            VelocityFamily::Custom { table } => {
                match table.binary_search_by(|probe| probe.0.partial_cmp(&w).unwrap()) {
                    Ok(i) => table[i].1,
                    Err(0) => table[0].1,
                    Err(i) if i == table.len() => table[i - 1].1,
                    Err(i) => {
                        let (u0, v0) = table[i - 1];
                        let (u1, v1) = table[i];
                        v0 + (v1 - v0) * (w - u0) / (u1 - u0)
                    }
                }
            }
        }
    }

    /// Slope of the speed law (piecewise constant for tables).
    pub fn v_prime(&self, w: f64) -> f64 {
        match &self.family {
            VelocityFamily::Greenshields => -1.0,
            VelocityFamily::Custom { table } => {
                let i = match table.binary_search_by(|probe| probe.0.partial_cmp(&w).unwrap()) {
                    Ok(i) => i.clamp(1, table.len() - 1),
                    Err(i) => i.clamp(1, table.len() - 1),
                };
                let (u0, v0) = table[i - 1];
                let (u1, v1) = table[i];
                (v1 - v0) / (u1 - u0)
            }
        }
    }

    /// Flux `f(u) = u V(u)`. Errors outside `[0, 1]`.
    pub fn flux(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("flux argument {u} outside [0, 1]")));
        }
        Ok(u * self.v(u))
    }

    /// Like [`flux`](Self::flux) but clamping tiny round-off excursions.
    #[inline]
    pub fn flux_clamped(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        u * self.v(u)
    }

    /// Slope of the flux, `f'(u) = V(u) + u V'(u)`.
    #[inline]
    pub fn flux_prime(&self, u: f64) -> f64 {
        self.v(u) + u * self.v_prime(u)
    }

    /// Entropy pair anchored at level `c`.
    pub fn kruzkov(&self, c: f64) -> Result<KruzkovPair> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Domain(format!("entropy level {c} outside [0, 1]")));
        }
        Ok(KruzkovPair { c, model: self.clone() })
    }
}

/// The entropy `|u - c|` with its flux
/// `sign(u - c) (f(u) - f(c))`, plus the symmetric two-argument form.
#[derive(Debug, Clone)]
pub struct KruzkovPair {
    pub c: f64,
    model: VelocityModel,
}

impl KruzkovPair {
    /// Entropy `alpha_c(u) = |u - c|`.
    #[inline]
    pub fn alpha(&self, u: f64) -> f64 {
        (u - self.c).abs()
    }

    /// Entropy flux `beta_c(u) = sign(u - c) (f(u) - f(c))`.
    #[inline]
    pub fn beta(&self, u: f64) -> f64 {
        let s = if u > self.c {
            1.0
        } else if u < self.c {
            -1.0
        } else {
            0.0
        };
        s * (self.model.flux_clamped(u) - self.model.flux_clamped(self.c))
    }

    /// Symmetric form `q(a, b) = sign(a - b)(f(a) - f(b))`; `beta(u)` equals
    /// `q(u, c)`.
    #[inline]
    pub fn q(&self, a: f64, b: f64) -> f64 {
        let s = if a > b {
            1.0
        } else if a < b {
            -1.0
        } else {
            0.0
        };
        s * (self.model.flux_clamped(a) - self.model.flux_clamped(b))
    }
}
