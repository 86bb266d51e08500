//! Disk automorphisms acting on weights, and weights induced by conformal
//! maps of the disk onto planar domains.
//!
//! A weight `a` pulled back by a disk automorphism `Ψ` with boundary map
//! `ψ = Ψ|_S` is `b = (a∘ψ)·|dψ/dθ|^{-1}`. Pullbacks leave the Steklov
//! spectrum, the zeta function and the zeta-invariants unchanged.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{boundary_length, min_grid, resolve_real, WeightFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Preserving,
    Reversing,
}

/// `Ψ(z) = e^{iα}(z − w)/(1 − w̄z)`, applied to `z̄` when orientation reversing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    w: Complex64,
    alpha: f64,
    orientation: Orientation,
}

impl MoebiusMap {
    pub fn new(w: Complex64, alpha: f64, orientation: Orientation) -> Result<Self> {
        if !(w.norm() < 1.0) {
            return Err(Error::InvalidMoebius(w.norm()));
        }
        Ok(Self {
            w,
            alpha,
            orientation,
        })
    }

    pub fn preserving(w: Complex64, alpha: f64) -> Result<Self> {
        Self::new(w, alpha, Orientation::Preserving)
    }

    pub fn identity() -> Self {
        Self {
            w: Complex64::new(0.0, 0.0),
            alpha: 0.0,
            orientation: Orientation::Preserving,
        }
    }

    pub fn w(&self) -> Complex64 {
        self.w
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn holomorphic_part(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, self.alpha) * (z - self.w) / (1.0 - self.w.conj() * z)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        match self.orientation {
            Orientation::Preserving => self.holomorphic_part(z),
            Orientation::Reversing => self.holomorphic_part(z.conj()),
        }
    }

    fn boundary_point(&self, theta: f64) -> Complex64 {
        match self.orientation {
            Orientation::Preserving => Complex64::from_polar(1.0, theta),
            Orientation::Reversing => Complex64::from_polar(1.0, -theta),
        }
    }

    /// `ψ(θ) = arg Ψ(e^{iθ})`.
    pub fn boundary_angle(&self, theta: f64) -> f64 {
        self.apply(Complex64::from_polar(1.0, theta)).arg()
    }

    /// `|dψ/dθ| = (1 − |w|²)/|1 − w̄ z|²` at the (possibly conjugated) boundary point.
    pub fn boundary_speed(&self, theta: f64) -> f64 {
        let z = self.boundary_point(theta);
        (1.0 - self.w.norm_sqr()) / (1.0 - self.w.conj() * z).norm_sqr()
    }

    /// `(w, α)` of `z ↦ conj(P(conj z))`.
    fn conjugated(&self) -> (Complex64, f64) {
        (self.w.conj(), -self.alpha)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        use Orientation::*;
        let (w2, a2) = match self.orientation {
            Preserving => (inner.w, inner.alpha),
            Reversing => inner.conjugated(),
        };
        let orientation = if self.orientation == inner.orientation {
            Preserving
        } else {
            Reversing
        };
        // 2x2 matrix product of [[e^{iα}, −e^{iα}w], [−w̄, 1]]
        let m = |w: Complex64, a: f64| {
            let e = Complex64::from_polar(1.0, a);
            [[e, -e * w], [-w.conj(), Complex64::new(1.0, 0.0)]]
        };
        let p = m(self.w, self.alpha);
        let q = m(w2, a2);
        let prod = [
            [
                p[0][0] * q[0][0] + p[0][1] * q[1][0],
                p[0][0] * q[0][1] + p[0][1] * q[1][1],
            ],
            [
                p[1][0] * q[0][0] + p[1][1] * q[1][0],
                p[1][0] * q[0][1] + p[1][1] * q[1][1],
            ],
        ];
        let d = prod[1][1];
        let rot = prod[0][0] / d;
        let w = -(prod[1][0] / d).conj();
        Self {
            w,
            alpha: rot.arg(),
            orientation,
        }
    }
}

impl fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "moebius(w={}{:+}i, alpha={}, {:?})",
            self.w.re, self.w.im, self.alpha, self.orientation
        )
    }
}

/// `b = (a∘ψ)·|dψ/dθ|^{-1}`, analyzed on a grid fine enough to resolve it.
pub fn moebius_pullback(a: &WeightFunction, m: &MoebiusMap) -> Result<WeightFunction> {
    let start = (4 * min_grid(a.order())).max(64);
    let series = resolve_real(start, |angles| {
        Ok(angles
            .iter()
            .map(|&t| a.eval(m.boundary_angle(t)) / m.boundary_speed(t))
            .collect())
    })?;
    WeightFunction::new(series, format!("{m} * {}", a.meta()))
}

/// Conformal map `Φ` of the disk given by the Taylor coefficients of `Φ′`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainMap {
    #[serde(with = "taylor_pairs")]
    pub taylor: Vec<Complex64>,
    pub name: String,
}

mod taylor_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl DomainMap {
    pub fn new(taylor: Vec<Complex64>, name: impl Into<String>) -> Self {
        Self {
            taylor,
            name: name.into(),
        }
    }

    /// `Φ(z) = cz`.
    pub fn dilation(c: f64) -> Self {
        Self::new(vec![Complex64::new(c, 0.0)], format!("dilation({c})"))
    }

    /// `Φ(z) = z + εz^m`.
    pub fn perturbed_disk(eps: f64, m: usize) -> Self {
        let mut taylor = vec![Complex64::new(0.0, 0.0); m.max(1)];
        taylor[0] = Complex64::new(1.0, 0.0);
        if m >= 1 {
            taylor[m - 1] += Complex64::new(eps * m as f64, 0.0);
        }
        Self::new(taylor, format!("perturbed_disk({eps}, {m})"))
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.taylor.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `Σ_{n≥1} n|c_n| ≤ |c_0|`, a sufficient condition for univalence.
    pub fn univalence_criterion(&self) -> bool {
        let head = self.taylor.first().map(|c| c.norm()).unwrap_or(0.0);
        let rest: f64 = self
            .taylor
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| n as f64 * c.norm())
            .sum();
        rest <= head
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("domain map serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct MappedWeight {
    pub weight: WeightFunction,
    /// Length of the image curve, `∫|Φ′| dθ`.
    pub length: f64,
    /// Set when the sufficient univalence criterion fails; the map may be multisheeted.
    pub univalence_warning: bool,
}

/// `a(θ) = |Φ′(e^{iθ})|^{-1}`.
pub fn weight_from_map(d: &DomainMap) -> Result<MappedWeight> {
    let probe = (64 * d.taylor.len()).max(1024);
    let (min, max) = (0..probe)
        .map(|j| d.derivative(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / probe as f64)).norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(min > 1e-12 * max.max(1.0)) {
        return Err(Error::VanishingDerivative { min });
    }
    let series = resolve_real((4 * min_grid(d.taylor.len())).max(64), |angles| {
        Ok(angles
            .iter()
            .map(|&t| 1.0 / d.derivative(Complex64::from_polar(1.0, t)).norm())
            .collect())
    })?;
    let weight = WeightFunction::new(series, d.name.clone())?;
    let length = boundary_length(&weight)?;
    Ok(MappedWeight {
        weight,
        length,
        univalence_warning: !d.univalence_criterion(),
    })
}

/// Named weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gallery {
    /// `a ≡ 1`.
    Disk,
    /// Pullback of `1` by the automorphism with real `w` and rotation `α`.
    Moebius { w: f64, alpha: f64 },
    /// `a = |Φ′|^{-1}` for `Φ(z) = z + εz^m`.
    PerturbedDisk { eps: f64, m: usize },
    /// `a = 1 + c cos(mθ)`.
    Cosine { c: f64, m: usize },
}

impl Gallery {
    pub const HELP: &'static str =
        "disk | moebius(w, alpha) | perturbed_disk(eps, m) | cosine(c, m)";

    pub fn weight(&self) -> Result<WeightFunction> {
        let w = match *self {
            Gallery::Disk => WeightFunction::constant(1.0)?,
            Gallery::Moebius { w, alpha } => {
                let m = MoebiusMap::preserving(Complex64::new(w, 0.0), alpha)?;
                moebius_pullback(&WeightFunction::constant(1.0)?, &m)?
            }
            Gallery::PerturbedDisk { eps, m } => {
                weight_from_map(&DomainMap::perturbed_disk(eps, m))?.weight
            }
            Gallery::Cosine { c, m } => WeightFunction::cosine(c, m)?,
        };
        Ok(w.with_meta(self.to_string()))
    }

    /// Entries used by the verification suites.
    pub fn standard() -> Vec<Gallery> {
        vec![
            Gallery::Disk,
            Gallery::Moebius { w: 0.5, alpha: 0.0 },
            Gallery::PerturbedDisk { eps: 0.1, m: 2 },
            Gallery::PerturbedDisk { eps: 0.05, m: 3 },
            Gallery::Cosine { c: 0.5, m: 2 },
            Gallery::Cosine { c: 0.3, m: 3 },
        ]
    }
}

impl fmt::Display for Gallery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gallery::Disk => write!(f, "disk"),
            Gallery::Moebius { w, alpha } => write!(f, "moebius({w}, {alpha})"),
            Gallery::PerturbedDisk { eps, m } => write!(f, "perturbed_disk({eps}, {m})"),
            Gallery::Cosine { c, m } => write!(f, "cosine({c}, {m})"),
        }
    }
}

impl FromStr for Gallery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::UnknownGallery(s.to_string());
        let (name, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..].strip_suffix(')').ok_or_else(unknown)?;
                let args = inner
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| unknown()))
                    .collect::<Result<Vec<_>>>()?;
                (&s[..i], args)
            }
            None => (s, Vec::new()),
        };
        let order = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(unknown())
            }
        };
        match (name.trim(), args.as_slice()) {
            ("disk", []) => Ok(Gallery::Disk),
            ("moebius", [w]) => Ok(Gallery::Moebius { w: *w, alpha: 0.0 }),
            ("moebius", [w, alpha]) => Ok(Gallery::Moebius { w: *w, alpha: *alpha }),
            ("perturbed_disk", [eps, m]) => Ok(Gallery::PerturbedDisk {
                eps: *eps,
                m: order(*m)?,
            }),
            ("cosine", [c, m]) => Ok(Gallery::Cosine { c: *c, m: order(*m)? }),
            _ => Err(unknown()),
        }
    }
}

/// Parses a gallery label and builds the weight.
pub fn gallery(name: &str) -> Result<WeightFunction> {
    name.parse::<Gallery>()?.weight()
}
