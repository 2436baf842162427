//! Parameter classes, anisotropic level sets and sample-grid accounting.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bspline::SplineOrder;
use crate::error::{Error, Result};

/// `(1/p - 1/q)_+`.
pub fn delta_pq(p: f64, q: f64) -> f64 {
    (1.0 / p - 1.0 / q).max(0.0)
}

/// Kind of anisotropic smoothness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SmoothnessKind {
    /// Mixed smoothness vector `a`, `Ω(t) = Π t_i^{a_i}`.
    Mixed { a: Vec<f64> },
    /// Hybrid weight `2^{α|k|_1 + β|k|_∞}`.
    Hybrid { alpha: f64, beta: f64 },
}

/// Parameters of a recovery problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSpec {
    pub p: f64,
    pub theta: f64,
    pub q: f64,
    pub r: SplineOrder,
    pub d: usize,
    pub kind: SmoothnessKind,
    /// Energy exponent (hybrid only).
    pub gamma: Option<f64>,
    /// Fine index of the energy norm `B^γ_{q,τ}`.
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Class of a triple `(p, θ, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TripleClass {
    A,
    B,
}

impl fmt::Display for TripleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TripleClass::A => "A",
            TripleClass::B => "B",
        })
    }
}

/// Class A iff `p >= q, θ <= min(q, 1)`, or `p < q < ∞, θ <= q`, or `p < q = ∞, θ <= 1`.
pub fn classify_triple(p: f64, theta: f64, q: f64) -> TripleClass {
    let a = if p >= q {
        theta <= q.min(1.0)
    } else if q.is_finite() {
        theta <= q
    } else {
        theta <= 1.0
    };
    if a {
        TripleClass::A
    } else {
        TripleClass::B
    }
}

fn positive_extended(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must lie in (0, inf], got {v}")))
    }
}

impl SmoothnessSpec {
    pub fn mixed(p: f64, theta: f64, q: f64, r: SplineOrder, a: Vec<f64>) -> Self {
        SmoothnessSpec {
            p,
            theta,
            q,
            r,
            d: a.len(),
            kind: SmoothnessKind::Mixed { a },
            gamma: None,
            tau: None,
            epsilon: None,
        }
    }

    pub fn hybrid(p: f64, theta: f64, q: f64, r: SplineOrder, d: usize, alpha: f64, beta: f64) -> Self {
        SmoothnessSpec {
            p,
            theta,
            q,
            r,
            d,
            kind: SmoothnessKind::Hybrid { alpha, beta },
            gamma: None,
            tau: None,
            epsilon: None,
        }
    }

    pub fn with_gamma(mut self, gamma: f64, tau: f64) -> Self {
        self.gamma = Some(gamma);
        self.tau = Some(tau);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    /// `(1/p - 1/q)_+`.
    pub fn delta(&self) -> f64 {
        delta_pq(self.p, self.q)
    }

    pub fn class(&self) -> TripleClass {
        classify_triple(self.p, self.theta, self.q)
    }

    /// `τ* = min(τ, 1)`.
    pub fn tau_star(&self) -> f64 {
        self.tau.unwrap_or(self.q).min(1.0)
    }

    /// Checks that the level sets of this spec are finite and well defined.
    pub fn validate_structure(&self) -> Result<()> {
        positive_extended("p", self.p)?;
        positive_extended("theta", self.theta)?;
        positive_extended("q", self.q)?;
        if self.d == 0 {
            return Err(Error::InvalidSpec("dimension d must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidSpec(format!("epsilon must be positive, got {e}")));
            }
        }
        if let Some(t) = self.tau {
            positive_extended("tau", t)?;
        }
        match &self.kind {
            SmoothnessKind::Mixed { a } => {
                if a.len() != self.d {
                    return Err(Error::DimensionMismatch {
                        expected: self.d,
                        got: a.len(),
                    });
                }
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("smoothness vector must be finite".into()));
                }
                if self.d > 1 && !(a[0] < a[1]) {
                    return Err(Error::InvalidSpec(format!("need a_1 < a_2, got {a:?}")));
                }
                if a.windows(2).skip(1).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidSpec(format!("need a_2 <= ... <= a_d, got {a:?}")));
                }
                if self.gamma.is_some() {
                    return Err(Error::InvalidSpec(
                        "energy exponent gamma needs hybrid smoothness".into(),
                    ));
                }
            }
            SmoothnessKind::Hybrid { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite()) || *alpha < 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "need alpha >= 0 and finite beta, got ({alpha}, {beta})"
                    )));
                }
                match self.gamma {
                    None if *beta == 0.0 => {
                        return Err(Error::InvalidSpec("hybrid smoothness needs beta != 0".into()));
                    }
                    Some(g) if !(g > 0.0 && g.is_finite()) => {
                        return Err(Error::InvalidSpec(format!("gamma must be positive, got {g}")));
                    }
                    Some(g) if *beta == g => {
                        return Err(Error::InvalidSpec("energy problems need beta != gamma".into()));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Full validation, including the smoothness ranges the rates are stated for.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        let inv_p = 1.0 / self.p;
        let r = self.r.get() as f64;
        match &self.kind {
            SmoothnessKind::Mixed { a } => {
                let last = a[a.len() - 1];
                if !(inv_p < a[0] && last < r) {
                    return Err(Error::InvalidSpec(format!(
                        "need 1/p < a_1 and a_d < r, got 1/p = {inv_p}, a = {a:?}, r = {r}"
                    )));
                }
            }
            SmoothnessKind::Hybrid { alpha, beta } => {
                let lo = alpha.min(alpha + beta);
                let hi = alpha.max(alpha + beta);
                if !(inv_p < lo && hi < r) {
                    return Err(Error::InvalidSpec(format!(
                        "need 1/p < min(alpha, alpha+beta) and max(alpha, alpha+beta) < r, got 1/p = {inv_p}, alpha = {alpha}, beta = {beta}, r = {r}"
                    )));
                }
                if let Some(g) = self.gamma {
                    let d = self.d as f64;
                    let ok = if *beta > g {
                        *alpha > (g - beta) / d
                    } else {
                        *alpha > g - beta
                    };
                    if !ok {
                        return Err(Error::InvalidSpec(format!(
                            "energy problem needs alpha > (gamma-beta)/d for beta > gamma and alpha > gamma-beta for beta < gamma, got alpha = {alpha}, beta = {beta}, gamma = {g}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Level-set rule matching this spec: `Δ''` when `γ` is given, otherwise
    /// `Δ'` (mixed) or `Δ` (hybrid) for the class of `(p, θ, q)`.
    pub fn level_rule(&self) -> Result<LevelRule> {
        match (&self.kind, self.gamma) {
            (SmoothnessKind::Hybrid { .. }, Some(_)) => energy_rule(self, self.theta > self.tau_star()),
            (SmoothnessKind::Hybrid { .. }, None) => hybrid_rule(self, self.class()),
            (SmoothnessKind::Mixed { .. }, _) => mixed_rule(self, self.class()),
        }
    }

    /// Exponent `ν` with `|G(Δ(ξ))| ≍ 2^{ξ/ν}`; the error decays like `n^{-ν}`.
    pub fn nu(&self) -> f64 {
        nu_with_delta(self, self.delta())
    }

    /// Cubature exponent: `ν` with `(1/p - 1)_+` in place of `(1/p - 1/q)_+`.
    pub fn cubature_nu(&self) -> f64 {
        nu_with_delta(self, delta_pq(self.p, 1.0))
    }
}

fn nu_with_delta(spec: &SmoothnessSpec, delta: f64) -> f64 {
    let d = spec.d as f64;
    match &spec.kind {
        SmoothnessKind::Mixed { a } => a[0] - delta,
        SmoothnessKind::Hybrid { alpha, beta } => {
            let b = beta - spec.gamma.unwrap_or(0.0);
            if b > 0.0 {
                alpha + b / d - delta
            } else {
                alpha + b - delta
            }
        }
    }
}

/// Which defining inequality a level set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    DeltaHybrid,
    DeltaMixed,
    DeltaEnergy,
    FullGrid,
    Smolyak,
    Explicit,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::DeltaHybrid => "hybrid",
            Family::DeltaMixed => "mixed",
            Family::DeltaEnergy => "energy",
            Family::FullGrid => "full",
            Family::Smolyak => "smolyak",
            Family::Explicit => "explicit",
        })
    }
}

/// `φ(k) = Σ_i w_i k_i + c |k|_∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelFunctional {
    pub weights: Vec<f64>,
    pub linf: f64,
}

impl LevelFunctional {
    pub fn eval(&self, k: &[u32]) -> f64 {
        let lin: f64 = self.weights.iter().zip(k).map(|(w, &ki)| w * ki as f64).sum();
        let max = k.iter().copied().max().unwrap_or(0) as f64;
        lin + self.linf * max
    }

    fn check(&self) -> Result<()> {
        let wmin = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        let monotone = wmin >= 0.0 && wmin + self.linf.min(0.0) >= 0.0;
        let finite = wmin + self.linf > 0.0;
        if monotone && finite && self.weights.iter().all(|w| w.is_finite()) && self.linf.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "level functional {:?} + {}|k|_inf does not define finite downward-closed sets",
                self.weights, self.linf
            )))
        }
    }
}

fn membership_tol(xi: f64) -> f64 {
    1e-12 * xi.abs().max(1.0)
}

/// A defining inequality `φ(k) <= ξ` together with its family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRule {
    pub family: Family,
    pub functional: LevelFunctional,
    /// Growth exponent `ν` of the budget, `n ≍ 2^{ξ/ν}` (up to logarithms for Smolyak).
    pub nu: f64,
}

impl LevelRule {
    fn new(family: Family, functional: LevelFunctional, nu: f64) -> Result<Self> {
        functional.check()?;
        Ok(LevelRule { family, functional, nu })
    }

    pub fn dim(&self) -> usize {
        self.functional.weights.len()
    }

    /// `{k >= 0 : φ(k) <= ξ}`, enumerated breadth-first from 0.
    pub fn level_set(&self, xi: f64) -> LevelSet {
        let d = self.dim();
        let bound = xi + membership_tol(xi);
        let mut levels = BTreeSet::new();
        let zero = vec![0u32; d];
        if xi.is_finite() && self.functional.eval(&zero) <= bound {
            let mut seen: HashSet<Vec<u32>> = HashSet::new();
            let mut queue = VecDeque::from([zero.clone()]);
            seen.insert(zero);
            while let Some(k) = queue.pop_front() {
                for i in 0..d {
                    let mut next = k.clone();
                    next[i] += 1;
                    if !seen.contains(&next) && self.functional.eval(&next) <= bound {
                        seen.insert(next.clone());
                        queue.push_back(next);
                    }
                }
                levels.insert(k);
            }
        }
        LevelSet {
            dim: d,
            levels: levels.into_iter().collect(),
            xi: Some(xi),
            family: self.family,
        }
    }
}

fn check_epsilon(spec: &SmoothnessSpec, upper: f64) -> Result<f64> {
    match spec.epsilon {
        None => Ok(upper / 2.0),
        Some(e) if e > 0.0 && e < upper => Ok(e),
        Some(e) => Err(Error::EpsilonOutOfRange { epsilon: e, upper }),
    }
}

fn hybrid_params(spec: &SmoothnessSpec) -> Result<(f64, f64)> {
    match spec.kind {
        SmoothnessKind::Hybrid { alpha, beta } => Ok((alpha, beta)),
        _ => Err(Error::InvalidSpec(
            "hybrid level set needs hybrid smoothness (alpha, beta)".into(),
        )),
    }
}

fn hybrid_like(spec: &SmoothnessSpec, beta: f64, perturbed: bool, family: Family) -> Result<LevelRule> {
    let (alpha, _) = hybrid_params(spec)?;
    let d = spec.d;
    let base = alpha - spec.delta();
    let (c1, cinf) = if perturbed {
        let eps = check_epsilon(spec, base.min(beta.abs()))?;
        if beta > 0.0 {
            (base + eps / d as f64, beta - eps)
        } else {
            (base - eps, beta + eps)
        }
    } else {
        (base, beta)
    };
    let nu = if beta > 0.0 {
        base + beta / d as f64
    } else {
        base + beta
    };
    LevelRule::new(
        family,
        LevelFunctional {
            weights: vec![c1; d],
            linf: cinf,
        },
        nu,
    )
}

/// `Δ(ξ)`: `(α - δ)|k|_1 + β|k|_∞ <= ξ` for class A, with the ε-perturbed
/// coefficients for class B.
pub fn hybrid_rule(spec: &SmoothnessSpec, cls: TripleClass) -> Result<LevelRule> {
    spec.validate_structure()?;
    let (_, beta) = hybrid_params(spec)?;
    if beta == 0.0 {
        return Err(Error::InvalidSpec("hybrid level set needs beta != 0".into()));
    }
    hybrid_like(spec, beta, cls == TripleClass::B, Family::DeltaHybrid)
}

/// `Δ'(ξ)`: `(a, k) - δ|k|_1 <= ξ`, class B with `a(ε) = (a_1, a_2 - ε, ..., a_d - ε)`.
pub fn mixed_rule(spec: &SmoothnessSpec, cls: TripleClass) -> Result<LevelRule> {
    spec.validate_structure()?;
    let SmoothnessKind::Mixed { a } = &spec.kind else {
        return Err(Error::InvalidSpec("mixed level set needs a smoothness vector a".into()));
    };
    let delta = spec.delta();
    let mut w: Vec<f64> = a.iter().map(|ai| ai - delta).collect();
    if cls == TripleClass::B && a.len() > 1 {
        let eps = check_epsilon(spec, a[1] - a[0])?;
        for wi in w.iter_mut().skip(1) {
            *wi -= eps;
        }
    }
    LevelRule::new(
        Family::DeltaMixed,
        LevelFunctional { weights: w, linf: 0.0 },
        a[0] - delta,
    )
}

/// `Δ''(ξ)`: `Δ(ξ)` with `β` replaced by `β - γ`; ε-perturbed when `θ > τ*`.
pub fn energy_rule(spec: &SmoothnessSpec, theta_exceeds_tau_star: bool) -> Result<LevelRule> {
    spec.validate_structure()?;
    let (_, beta) = hybrid_params(spec)?;
    let Some(gamma) = spec.gamma else {
        return Err(Error::InvalidSpec("energy level set needs gamma".into()));
    };
    hybrid_like(spec, beta - gamma, theta_exceeds_tau_star, Family::DeltaEnergy)
}

/// `Δ_1(ξ) = {λ|k|_∞ <= ξ}` or `Δ_2(ξ) = {λ|k|_1 <= ξ}`.
pub fn comparison_rule(lambda: f64, kind: Family, d: usize) -> Result<LevelRule> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidSpec(format!("lambda must be positive, got {lambda}")));
    }
    let functional = match kind {
        Family::FullGrid => LevelFunctional {
            weights: vec![0.0; d],
            linf: lambda,
        },
        Family::Smolyak => LevelFunctional {
            weights: vec![lambda; d],
            linf: 0.0,
        },
        other => return Err(Error::InvalidSpec(format!("{other} is not a comparison family"))),
    };
    let nu = if kind == Family::FullGrid {
        lambda / d as f64
    } else {
        lambda
    };
    LevelRule::new(kind, functional, nu)
}

pub fn delta_hybrid(xi: f64, spec: &SmoothnessSpec, cls: TripleClass) -> Result<LevelSet> {
    Ok(hybrid_rule(spec, cls)?.level_set(xi))
}

pub fn delta_mixed(xi: f64, spec: &SmoothnessSpec, cls: TripleClass) -> Result<LevelSet> {
    Ok(mixed_rule(spec, cls)?.level_set(xi))
}

pub fn delta_energy(xi: f64, spec: &SmoothnessSpec, theta_exceeds_tau_star: bool) -> Result<LevelSet> {
    Ok(energy_rule(spec, theta_exceeds_tau_star)?.level_set(xi))
}

pub fn comparison_sets(xi: f64, lambda: f64, kind: Family, d: usize) -> Result<LevelSet> {
    Ok(comparison_rule(lambda, kind, d)?.level_set(xi))
}

/// A finite downward-closed set of levels, sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    dim: usize,
    levels: Vec<Vec<u32>>,
    /// Threshold the set was generated from, if any.
    pub xi: Option<f64>,
    pub family: Family,
}

/// Points `2^{-k}s` of one level counted by the declared budget.
fn level_count(k: &[u32]) -> u128 {
    k.iter()
        .fold(1u128, |acc, &ki| acc.saturating_mul((1u128 << ki.min(120)) + 1))
}

/// Number of grid points whose hierarchical level is exactly `l`.
fn hierarchical_count(l: &[u32]) -> u128 {
    l.iter().fold(1u128, |acc, &li| {
        acc.saturating_mul(if li == 0 { 2 } else { 1u128 << (li - 1).min(120) })
    })
}

impl LevelSet {
    /// Checks downward closure of an explicit list of levels.
    pub fn from_levels(dim: usize, levels: Vec<Vec<u32>>) -> Result<Self> {
        let set: BTreeSet<Vec<u32>> = levels.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidSpec("level set must not be empty".into()));
        }
        for k in &set {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.len(),
                });
            }
            for i in 0..dim {
                if k[i] > 0 {
                    let mut below = k.clone();
                    below[i] -= 1;
                    if !set.contains(&below) {
                        return Err(Error::InvalidSpec(format!(
                            "level set is not downward closed: {k:?} present, {below:?} missing"
                        )));
                    }
                }
            }
        }
        Ok(LevelSet {
            dim,
            levels: set.into_iter().collect(),
            xi: None,
            family: Family::Explicit,
        })
    }

    /// The box `{k : k <= m}`.
    pub fn full_box(m: &[u32]) -> Self {
        let mut levels = Vec::new();
        let shape: Vec<usize> = m.iter().map(|&v| v as usize + 1).collect();
        crate::tensor::for_each_index(&shape, |idx| levels.push(idx.iter().map(|&i| i as u32).collect()));
        LevelSet {
            dim: m.len(),
            levels,
            xi: None,
            family: Family::Explicit,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &[Vec<u32>] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn contains(&self, k: &[u32]) -> bool {
        self.levels.binary_search_by(|l| l.as_slice().cmp(k)).is_ok()
    }

    pub fn is_subset(&self, other: &LevelSet) -> bool {
        self.levels.iter().all(|k| other.contains(k))
    }

    pub fn is_downward_closed(&self) -> bool {
        self.levels.iter().all(|k| {
            (0..self.dim).all(|i| {
                k[i] == 0 || {
                    let mut below = k.clone();
                    below[i] -= 1;
                    self.contains(&below)
                }
            })
        })
    }

    /// Largest level component in any direction.
    pub fn max_level(&self) -> u32 {
        self.levels.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn max_level_per_dim(&self) -> Vec<u32> {
        (0..self.dim)
            .map(|i| self.levels.iter().map(|k| k[i]).max().unwrap_or(0))
            .collect()
    }

    /// `n = Σ_{k∈Δ} Π_j (2^{k_j} + 1)`.
    pub fn budget(&self) -> u128 {
        self.levels
            .iter()
            .map(|k| level_count(k))
            .fold(0u128, u128::saturating_add)
    }

    /// Number of distinct points of `G(Δ)`.
    pub fn distinct_points(&self) -> u128 {
        self.levels
            .iter()
            .map(|k| hierarchical_count(k))
            .fold(0u128, u128::saturating_add)
    }

    pub fn sample_grid(&self) -> SampleGrid {
        SampleGrid {
            delta: self.clone(),
            budget: self.budget(),
            distinct_points: self.distinct_points(),
        }
    }

    /// One line `k_1 ... k_d` per level, lexicographic order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in &self.levels {
            let line: Vec<String> = k.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the line format of [`LevelSet::to_text`]; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut levels = Vec::new();
        let mut dim = None;
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let k: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
            match dim {
                None => dim = Some(k.len()),
                Some(d) if d != k.len() => {
                    return Err(Error::Parse(format!(
                        "line {}: expected {d} entries, got {}",
                        no + 1,
                        k.len()
                    )))
                }
                _ => {}
            }
            levels.push(k);
        }
        let dim = dim.ok_or_else(|| Error::Parse("no levels".into()))?;
        LevelSet::from_levels(dim, levels)
    }
}

/// Sample points `{2^{-k}s : k ∈ Δ, s ∈ I^d(k)}` with the with-multiplicity count.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    pub delta: LevelSet,
    pub budget: u128,
    pub distinct_points: u128,
}

impl SampleGrid {
    /// All `(k, s)` with `0 <= s_i <= 2^{k_i}`, level by level.
    pub fn pairs(&self) -> impl Iterator<Item = (Vec<u32>, Vec<u64>)> + '_ {
        self.delta.levels().iter().flat_map(|k| {
            let shape: Vec<usize> = k.iter().map(|&ki| (1usize << ki) + 1).collect();
            let mut all = Vec::new();
            crate::tensor::for_each_index(&shape, |idx| {
                all.push((k.clone(), idx.iter().map(|&i| i as u64).collect()))
            });
            all.into_iter()
        })
    }
}

/// Largest breakpoint `ξ = φ(k)` of `rule` whose level set has budget at most `n`.
pub fn xi_for_budget(n: u128, rule: &LevelRule) -> Result<f64> {
    let d = rule.dim();
    let minimal = 1u128 << d.min(127);
    if n < minimal {
        return Err(Error::BudgetTooSmall {
            n: n.min(u64::MAX as u128) as u64,
            minimal: minimal.min(u64::MAX as u128) as u64,
        });
    }
    let mut hi = 1.0;
    let mut set = rule.level_set(hi);
    while set.budget() <= n {
        hi *= 2.0;
        set = rule.level_set(hi);
    }
    let mut scored: Vec<(f64, u128)> = set
        .levels()
        .iter()
        .map(|k| (rule.functional.eval(k), level_count(k)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = 0.0;
    let mut total = 0u128;
    let mut i = 0;
    while i < scored.len() {
        let phi = scored[i].0;
        let tol = membership_tol(phi);
        let mut j = i;
        let mut group = 0u128;
        while j < scored.len() && scored[j].0 <= phi + tol {
            group = group.saturating_add(scored[j].1);
            j += 1;
        }
        total = total.saturating_add(group);
        if total > n {
            break;
        }
        best = scored[j - 1].0;
        i = j;
    }
    Ok(best)
}
