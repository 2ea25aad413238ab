//! The two channel families shared by sender and receiver: pure partially
//! entangled states `α|00⟩ + β|11⟩` and two-qubit X-states.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{self, re, sigma_y, tensor, Matrix, C64};

/// Tolerance for normalization and positivity of channel parameters.
pub const CHANNEL_TOL: f64 = 1e-12;

/// `α|00⟩ + β|11⟩` with `0 ≤ α ≤ β` real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PureChannel {
    alpha: f64,
    beta: f64,
}

impl PureChannel {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `α/β`, the amplitude ratio used by the extraction unitaries.
    pub fn ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn ket(&self) -> [C64; 4] {
        [re(self.alpha), re(0.0), re(0.0), re(self.beta)]
    }

    pub fn density(&self) -> Matrix {
        Matrix::outer(&self.ket()).expect("two-qubit ket")
    }

    /// The same channel written as an X-state with empty `H_{01,10}`.
    pub fn to_x_state(&self) -> XState {
        XState {
            r11: self.alpha * self.alpha,
            r22: 0.0,
            r33: 0.0,
            r44: self.beta * self.beta,
            r14: self.alpha * self.beta,
            r23: 0.0,
        }
    }
}

pub fn make_pure_channel(alpha: f64) -> Result<PureChannel> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    if !(0.0..=std::f64::consts::FRAC_1_SQRT_2 + CHANNEL_TOL).contains(&alpha) {
        return Err(Error::NonCanonicalAlpha { alpha });
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    if alpha > beta {
        // Within tolerance of the Bell point; snap to it.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        return Ok(PureChannel { alpha: h, beta: h });
    }
    Ok(PureChannel { alpha, beta })
}

pub fn pure_concurrence(ch: &PureChannel) -> f64 {
    2.0 * ch.alpha * ch.beta
}

/// Raw X-state parameters before validation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct XParams {
    pub r11: f64,
    pub r22: f64,
    pub r33: f64,
    pub r44: f64,
    pub r14: f64,
    pub r23: f64,
}

impl XParams {
    pub const KEYS: [&'static str; 6] = ["r11", "r22", "r33", "r44", "r14", "r23"];

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "r11" => self.r11,
            "r22" => self.r22,
            "r33" => self.r33,
            "r44" => self.r44,
            "r14" => self.r14,
            "r23" => self.r23,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "r11" => &mut self.r11,
            "r22" => &mut self.r22,
            "r33" => &mut self.r33,
            "r44" => &mut self.r44,
            "r14" => &mut self.r14,
            "r23" => &mut self.r23,
            other => return Err(Error::Parse(format!("unknown X-state key `{other}`"))),
        };
        *slot = value;
        Ok(())
    }
}

impl FromStr for XParams {
    type Err = Error;

    /// Parses `r11=..,r22=..,r33=..,r44=..,r14=..[,r23=..]`; `r23` defaults to 0.
    fn from_str(s: &str) -> Result<Self> {
        let mut params = XParams::default();
        let mut seen = [false; 6];
        for (key, value) in parse_kv_list(s)? {
            let idx = Self::KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Parse(format!("unknown X-state key `{key}`")))?;
            if seen[idx] {
                return Err(Error::Parse(format!("duplicate key `{key}`")));
            }
            seen[idx] = true;
            params.set(&key, value)?;
        }
        if let Some(missing) = Self::KEYS[..5]
            .iter()
            .zip(&seen)
            .find_map(|(k, s)| (!s).then_some(k))
        {
            return Err(Error::Parse(format!("missing key `{missing}`")));
        }
        Ok(params)
    }
}

/// Parses a pure-channel spec `alpha=<value>`.
pub fn parse_pure_spec(s: &str) -> Result<f64> {
    let pairs = parse_kv_list(s)?;
    match pairs.as_slice() {
        [(k, v)] if k == "alpha" => Ok(*v),
        _ => Err(Error::Parse(format!(
            "expected `alpha=<value>`, got `{s}`"
        ))),
    }
}

/// Splits a `key=value,key=value` list. Whitespace around tokens is ignored.
pub fn parse_kv_list(s: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("`{item}` is not key=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("`{}` is not a number", value.trim())))?;
        if !value.is_finite() {
            return Err(Error::Parse(format!("`{item}` is not finite")));
        }
        out.push((key.trim().to_string(), value));
    }
    if out.is_empty() {
        return Err(Error::Parse("empty channel spec".into()));
    }
    Ok(out)
}

/// Validated X-state channel with real non-negative coherences.
///
/// Basis order is `|00⟩, |01⟩, |10⟩, |11⟩` on `A ⊗ B`, so `r14` couples
/// `|00⟩` with `|11⟩` and `r23` couples `|01⟩` with `|10⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XState {
    r11: f64,
    r22: f64,
    r33: f64,
    r44: f64,
    r14: f64,
    r23: f64,
}

impl XState {
    /// Validates `p`. With `strict` the principal-subspace condition
    /// `r11·r44 > r22·r33` is also required.
    pub fn new(p: XParams, strict: bool) -> Result<Self> {
        let XParams {
            r11,
            r22,
            r33,
            r44,
            r14,
            r23,
        } = p;
        let named = [
            ("r11", r11),
            ("r22", r22),
            ("r33", r33),
            ("r44", r44),
            ("r14", r14),
            ("r23", r23),
        ];
        if named.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite("X-state parameters"));
        }
        if let Some(&(name, value)) = named.iter().find(|(_, v)| *v < 0.0) {
            return Err(Error::Negative { name, value });
        }
        let trace = r11 + r22 + r33 + r44;
        if (trace - 1.0).abs() > CHANNEL_TOL {
            return Err(Error::TraceNotUnit { trace });
        }
        if r14 * r14 > r11 * r44 + CHANNEL_TOL {
            return Err(Error::NotPositive {
                coherence: "r14",
                squared: r14 * r14,
                bound: r11 * r44,
            });
        }
        if r23 * r23 > r22 * r33 + CHANNEL_TOL {
            return Err(Error::NotPositive {
                coherence: "r23",
                squared: r23 * r23,
                bound: r22 * r33,
            });
        }
        if strict && r11 * r44 <= r22 * r33 {
            return Err(Error::PrincipalSubspace {
                outer: r11 * r44,
                inner: r22 * r33,
            });
        }
        if r11 > r44 + CHANNEL_TOL {
            return Err(Error::NonCanonicalOrdering { r11, r44 });
        }
        Ok(Self {
            r11,
            r22,
            r33,
            r44,
            r14,
            r23,
        })
    }

    pub fn r11(&self) -> f64 {
        self.r11
    }
    pub fn r22(&self) -> f64 {
        self.r22
    }
    pub fn r33(&self) -> f64 {
        self.r33
    }
    pub fn r44(&self) -> f64 {
        self.r44
    }
    pub fn r14(&self) -> f64 {
        self.r14
    }
    pub fn r23(&self) -> f64 {
        self.r23
    }

    pub fn params(&self) -> XParams {
        XParams {
            r11: self.r11,
            r22: self.r22,
            r33: self.r33,
            r44: self.r44,
            r14: self.r14,
            r23: self.r23,
        }
    }

    /// `r11·r44 > r22·r33`.
    pub fn satisfies_principal_subspace(&self) -> bool {
        self.r11 * self.r44 > self.r22 * self.r33
    }

    /// `√(r11/r44)`, the extraction ratio replacing `α/β`.
    pub fn ratio(&self) -> f64 {
        if self.r44 == 0.0 {
            0.0
        } else {
            (self.r11 / self.r44).sqrt()
        }
    }

    pub fn as_matrix(&self) -> Matrix {
        let mut m = Matrix::diag(&[self.r11, self.r22, self.r33, self.r44]).expect("dim 4");
        m[(0, 3)] = re(self.r14);
        m[(3, 0)] = re(self.r14);
        m[(1, 2)] = re(self.r23);
        m[(2, 1)] = re(self.r23);
        m
    }
}

impl fmt::Display for XState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "r11={},r22={},r33={},r44={},r14={},r23={}",
            self.r11, self.r22, self.r33, self.r44, self.r14, self.r23
        )
    }
}

/// Lenient constructor: validity and canonical ordering, no principal-subspace check.
pub fn make_x_state(r11: f64, r22: f64, r33: f64, r44: f64, r14: f64, r23: f64) -> Result<XState> {
    XState::new(
        XParams {
            r11,
            r22,
            r33,
            r44,
            r14,
            r23,
        },
        false,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceReport {
    pub c14: f64,
    pub c23: f64,
    /// `max(0, c14)`.
    pub concurrence: f64,
}

pub fn x_concurrence(x: &XState) -> ConcurrenceReport {
    let c14 = 2.0 * (x.r14 - (x.r22 * x.r33).sqrt());
    let c23 = 2.0 * (x.r23 - (x.r11 * x.r44).sqrt());
    ConcurrenceReport {
        c14,
        c23,
        concurrence: c14.max(0.0),
    }
}

/// Wootters concurrence of an arbitrary two-qubit density matrix.
///
/// Uses the eigenvalues of the Hermitian matrix `√ρ·ρ̃·√ρ`, which coincide
/// with those of `ρ·ρ̃` where `ρ̃ = (σy⊗σy)·ρ*·(σy⊗σy)`.
pub fn general_concurrence(rho: &Matrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: rho.dim(),
        });
    }
    rho.validate_density()?;
    let yy = tensor(&sigma_y(), &sigma_y())?;
    let flipped = rho.conj().conjugate_by(&yy)?;
    let sqrt_rho = qmath::hermitian_map(rho, |x| x.max(0.0).sqrt())?;
    let r = &(&sqrt_rho * &flipped) * &sqrt_rho;
    let lambdas: Vec<f64> = qmath::hermitian_eigenvalues(&r)?
        .into_iter()
        .map(|mu| mu.max(0.0).sqrt())
        .collect();
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Draws a valid canonical X-state: flat Dirichlet populations, ordered so
/// that `r11 ≤ r44`, and coherences `u·√(r11·r44)`, `v·√(r22·r33)` with
/// `u, v` uniform on `[0, 1]`. With `strict`, samples failing the
/// principal-subspace condition are redrawn.
pub fn random_x_state<R: Rng + ?Sized>(rng: &mut R, strict: bool) -> XState {
    loop {
        let mut pops = [0.0f64; 4];
        for p in &mut pops {
            // 1 - U lies in (0, 1], keeping the log finite.
            *p = -(1.0 - rng.gen::<f64>()).ln();
        }
        let total: f64 = pops.iter().sum();
        for p in &mut pops {
            *p /= total;
        }
        let [mut r11, r22, r33, mut r44] = pops;
        if r11 > r44 {
            std::mem::swap(&mut r11, &mut r44);
        }
        // Absorb round-off so the populations sum to one exactly enough.
        r44 = 1.0 - r11 - r22 - r33;
        let r14 = rng.gen::<f64>() * (r11 * r44).sqrt();
        let r23 = rng.gen::<f64>() * (r22 * r33).sqrt();
        let params = XParams {
            r11,
            r22,
            r33,
            r44,
            r14,
            r23,
        };
        if let Ok(x) = XState::new(params, strict) {
            return x;
        }
    }
}

/// Uniform random population set with `r11 ≤ r44`, for sweeps over `r14`.
pub fn random_populations<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    let x = random_x_state(rng, true);
    [x.r11, x.r22, x.r33, x.r44]
}
