//! Noise-disturbance uncertainty chains. Every evaluator returns each displayed
//! inequality of a chain as a link with its slack `lhs − rhs`.

use serde::Serialize;

use crate::instruments::{induced_povm, marginals, povm_mean_stddev, JointPovm, KrausInstrument};
use crate::metrics::{assess_disturbance, assess_noise, classify_operator};
use crate::operator::{commutator, ensure_dim, mean_stddev, trace_product, ComplexMatrix, DensityOperator, Observable};
use crate::{Error, NumericConfig, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Link {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack: lhs - rhs,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub links: Vec<Link>,
    pub holds: bool,
    pub terms: Vec<Term>,
}

impl ChainReport {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn min_slack(&self) -> f64 {
        self.links.iter().map(|l| l.slack).fold(f64::INFINITY, f64::min)
    }
}

/// Scalars of a three-link chain. `second` names the second error quantity
/// (`ε(B)` or `η(B)`) and `second_sd` its spread (`ΔN_B` or `ΔD_B`).
struct ChainTerms {
    second: &'static str,
    second_sd: &'static str,
    second_op: &'static str,
    eps_a: f64,
    err_b: f64,
    delta_a: f64,
    delta_b: f64,
    sd_a: f64,
    sd_b: f64,
    half_na_b: f64,
    half_a_nb: f64,
    half_ab: f64,
}

impl ChainTerms {
    fn report(self, tol: f64) -> ChainReport {
        let l1 = self.eps_a * self.err_b + self.eps_a * self.delta_b + self.delta_a * self.err_b;
        let r1 = self.sd_a * self.sd_b + self.sd_a * self.delta_b + self.delta_a * self.sd_b;
        let r2 = self.sd_a * self.sd_b + self.half_na_b + self.half_a_nb;
        let links = vec![
            Link::new("error products >= spread products", l1, r1),
            Link::new("spread products >= noise commutators", r1, r2),
            Link::new("noise commutators >= target commutator", r2, self.half_ab),
        ];
        let holds = links.iter().all(|l| l.holds(tol));
        let t = |name: &str, value: f64| Term {
            name: name.to_string(),
            value,
        };
        let terms = vec![
            t("eps(A)", self.eps_a),
            t(self.second, self.err_b),
            t("dA", self.delta_a),
            t("dB", self.delta_b),
            t("dN_A", self.sd_a),
            t(self.second_sd, self.sd_b),
            t("half|<[n_A,B]>|", self.half_na_b),
            t(self.second_op, self.half_a_nb),
            t("half|<[A,B]>|", self.half_ab),
        ];
        ChainReport { links, holds, terms }
    }
}

fn half_abs_commutator(x: &ComplexMatrix, y: &ComplexMatrix, state: &DensityOperator) -> f64 {
    0.5 * trace_product(&commutator(x, y), state.matrix()).norm()
}

fn check_pair(a: &Observable, b: &Observable, state: &DensityOperator) -> Result<()> {
    ensure_dim("observable pair", a.dim(), b.dim())?;
    ensure_dim("state", a.dim(), state.dim())
}

/// Chain for a direct joint measurement of `(A, B)` by commuting `(C, D)`,
/// with noise operators `N_A = C − A` and `N_B = D − B`.
pub fn joint_direct_chain(
    a: &Observable,
    b: &Observable,
    c: &Observable,
    d: &Observable,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<ChainReport> {
    check_pair(a, b, state)?;
    check_pair(c, d, state)?;
    let norm = c.commutator_norm(d);
    if norm > cfg.class_tol {
        return Err(Error::NonCommutingPair { norm });
    }
    let na = c.matrix() - a.matrix();
    let nb = d.matrix() - b.matrix();
    let rms = |n: &ComplexMatrix| trace_product(&(n * n), state.matrix()).re.max(0.0).sqrt();
    let (_, delta_a) = mean_stddev(a, state)?;
    let (_, delta_b) = mean_stddev(b, state)?;
    let (_, sd_a) = mean_stddev(&Observable::hermitian_part(&na), state)?;
    let (_, sd_b) = mean_stddev(&Observable::hermitian_part(&nb), state)?;
    Ok(ChainTerms {
        second: "eps(B)",
        second_sd: "dN_B",
        second_op: "half|<[A,n_B]>|",
        eps_a: rms(&na),
        err_b: rms(&nb),
        delta_a,
        delta_b,
        sd_a,
        sd_b,
        half_na_b: half_abs_commutator(&na, b.matrix(), state),
        half_a_nb: half_abs_commutator(a.matrix(), &nb, state),
        half_ab: half_abs_commutator(a.matrix(), b.matrix(), state),
    }
    .report(cfg.slack_tol))
}

/// Chain for a joint POVM whose marginals approximate `A` and `B`.
pub fn joint_povm_chain(
    a: &Observable,
    b: &Observable,
    joint: &JointPovm,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<ChainReport> {
    check_pair(a, b, state)?;
    ensure_dim("joint POVM", joint.dim(), a.dim())?;
    let (pa, pb) = marginals(joint);
    let na = assess_noise(a, &pa, state)?;
    let nb = assess_noise(b, &pb, state)?;
    let (_, delta_a) = mean_stddev(a, state)?;
    let (_, delta_b) = mean_stddev(b, state)?;
    Ok(ChainTerms {
        second: "eps(B)",
        second_sd: "dN_B",
        second_op: "half|<[A,n_B]>|",
        eps_a: na.rms_noise,
        err_b: nb.rms_noise,
        delta_a,
        delta_b,
        sd_a: na.noise_stddev,
        sd_b: nb.noise_stddev,
        half_na_b: half_abs_commutator(na.mean_noise_operator.matrix(), b.matrix(), state),
        half_a_nb: half_abs_commutator(a.matrix(), nb.mean_noise_operator.matrix(), state),
        half_ab: half_abs_commutator(a.matrix(), b.matrix(), state),
    }
    .report(cfg.slack_tol))
}

/// Chain for the noise of `instr` in measuring `A` and its disturbance of `B`.
pub fn instrument_chain(
    a: &Observable,
    b: &Observable,
    instr: &KrausInstrument,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<ChainReport> {
    check_pair(a, b, state)?;
    ensure_dim("instrument", instr.dim(), a.dim())?;
    let na = assess_noise(a, &induced_povm(instr), state)?;
    let db = assess_disturbance(b, instr, state, cfg)?;
    let (_, delta_a) = mean_stddev(a, state)?;
    let (_, delta_b) = mean_stddev(b, state)?;
    Ok(ChainTerms {
        second: "eta(B)",
        second_sd: "dD_B",
        second_op: "half|<[A,d_B]>|",
        eps_a: na.rms_noise,
        err_b: db.rms_disturbance,
        delta_a,
        delta_b,
        sd_a: na.noise_stddev,
        sd_b: db.disturbance_stddev,
        half_na_b: half_abs_commutator(na.mean_noise_operator.matrix(), b.matrix(), state),
        half_a_nb: half_abs_commutator(a.matrix(), db.mean_disturbance_operator.matrix(), state),
        half_ab: half_abs_commutator(a.matrix(), b.matrix(), state),
    }
    .report(cfg.slack_tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeisenbergReport {
    /// `[n_A, B] = 0` and `[d_B, A] = 0`
    pub condition_i: bool,
    /// uncorrelated noise for `A` and uncorrelated disturbance for `B`
    pub condition_ii: bool,
    /// unbiased measurement of `A` and unbiased disturbance of `B`
    pub condition_iii: bool,
    pub heisenberg_holds: bool,
    /// `ε(A)η(B)`
    pub product: f64,
    /// `½|⟨[A, B]⟩|`
    pub bound: f64,
    pub chain: ChainReport,
}

impl HeisenbergReport {
    pub fn any_condition(&self) -> bool {
        self.condition_i || self.condition_ii || self.condition_iii
    }
}

/// Tests the three sufficient conditions for `ε(A)η(B) ≥ ½|⟨[A, B]⟩|`.
pub fn heisenberg_check(
    a: &Observable,
    b: &Observable,
    instr: &KrausInstrument,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<HeisenbergReport> {
    check_pair(a, b, state)?;
    ensure_dim("instrument", instr.dim(), a.dim())?;
    let na = assess_noise(a, &induced_povm(instr), state)?;
    let db = assess_disturbance(b, instr, state, cfg)?;
    let n_op = na.mean_noise_operator.matrix();
    let d_op = db.mean_disturbance_operator.matrix();
    let max_norm = |m: ComplexMatrix| crate::operator::max_abs(&m);
    let condition_i =
        max_norm(commutator(n_op, b.matrix())) <= cfg.class_tol && max_norm(commutator(d_op, a.matrix())) <= cfg.class_tol;
    let noise_class = classify_operator(n_op, cfg);
    let dist_class = classify_operator(d_op, cfg);
    let product = na.rms_noise * db.rms_disturbance;
    let bound = half_abs_commutator(a.matrix(), b.matrix(), state);
    Ok(HeisenbergReport {
        condition_i,
        condition_ii: noise_class.uncorrelated && dist_class.uncorrelated,
        condition_iii: noise_class.unbiased && dist_class.unbiased,
        heisenberg_holds: product >= bound - cfg.slack_tol,
        product,
        bound,
        chain: instrument_chain(a, b, instr, state, cfg)?,
    })
}

/// `ε(A)ΔB ≥ ½|Tr([A, B]ρ)|` for an instrument that does not disturb `B`.
pub fn nondisturbing_bound(
    a: &Observable,
    b: &Observable,
    instr: &KrausInstrument,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<Link> {
    check_pair(a, b, state)?;
    ensure_dim("instrument", instr.dim(), a.dim())?;
    let eta = assess_disturbance(b, instr, state, cfg)?.rms_disturbance;
    if eta > cfg.eta_zero_tol {
        return Err(Error::DisturbanceNotZero { eta });
    }
    let eps = assess_noise(a, &induced_povm(instr), state)?.rms_noise;
    let (_, delta_b) = mean_stddev(b, state)?;
    Ok(Link::new(
        "eps(A) dB >= half|<[A,B]>|",
        eps * delta_b,
        half_abs_commutator(a.matrix(), b.matrix(), state),
    ))
}

/// `ΔA·η(B) ≥ ½|⟨[A, B]⟩|` for an instrument that measures `A` precisely.
pub fn precise_measurement_bound(
    a: &Observable,
    b: &Observable,
    instr: &KrausInstrument,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<Link> {
    check_pair(a, b, state)?;
    ensure_dim("instrument", instr.dim(), a.dim())?;
    let eps = assess_noise(a, &induced_povm(instr), state)?.rms_noise;
    if eps > cfg.eps_zero_tol {
        return Err(Error::NoiseNotZero { eps });
    }
    let eta = assess_disturbance(b, instr, state, cfg)?.rms_disturbance;
    let (_, delta_a) = mean_stddev(a, state)?;
    Ok(Link::new(
        "dA eta(B) >= half|<[A,B]>|",
        delta_a * eta,
        half_abs_commutator(a.matrix(), b.matrix(), state),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncorrelatedReport {
    /// `ε(A)ε(B) ≥ ΔN_A ΔN_B`
    pub eps_product_link: Link,
    /// `ΔN_A ΔN_B ≥ ½|⟨[A, B]⟩|`
    pub delta_n_link: Link,
    /// `Δ(Π^A)Δ(Π^B) ≥ |⟨[A, B]⟩|`
    pub povm_spread_link: Link,
}

impl UncorrelatedReport {
    pub fn holds(&self, tol: f64) -> bool {
        [&self.eps_product_link, &self.delta_n_link, &self.povm_spread_link]
            .iter()
            .all(|l| l.holds(tol))
    }
}

/// Product relations for a joint POVM whose marginals have state-independent noise.
pub fn uncorrelated_products(
    a: &Observable,
    b: &Observable,
    joint: &JointPovm,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<UncorrelatedReport> {
    check_pair(a, b, state)?;
    ensure_dim("joint POVM", joint.dim(), a.dim())?;
    let (pa, pb) = marginals(joint);
    let na = assess_noise(a, &pa, state)?;
    let nb = assess_noise(b, &pb, state)?;
    if !classify_operator(na.mean_noise_operator.matrix(), cfg).uncorrelated {
        return Err(Error::NotUncorrelated { which: "A" });
    }
    if !classify_operator(nb.mean_noise_operator.matrix(), cfg).uncorrelated {
        return Err(Error::NotUncorrelated { which: "B" });
    }
    let half_ab = half_abs_commutator(a.matrix(), b.matrix(), state);
    let spread_nab = na.noise_stddev * nb.noise_stddev;
    let (_, spread_a) = povm_mean_stddev(&pa, state)?;
    let (_, spread_b) = povm_mean_stddev(&pb, state)?;
    Ok(UncorrelatedReport {
        eps_product_link: Link::new("eps(A) eps(B) >= dN_A dN_B", na.rms_noise * nb.rms_noise, spread_nab),
        delta_n_link: Link::new("dN_A dN_B >= half|<[A,B]>|", spread_nab, half_ab),
        povm_spread_link: Link::new("d(Pi_A) d(Pi_B) >= |<[A,B]>|", spread_a * spread_b, 2.0 * half_ab),
    })
}
