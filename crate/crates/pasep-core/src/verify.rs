//! The identity suite: every oracle comparison and property of the crate,
//! run at configurable scale, with a machine-readable report.
//!
//! Checks never compare two values produced by the same code path — each
//! family pairs independent implementations (closed form vs enumeration,
//! linking construction vs generator solve, sampler vs exact law). Cap
//! overruns become skipped checks, never crashes, and the report is
//! deterministic given the same configuration.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::formulas::{
    c0_formula, cq_formula, cq_via_pie, eta_bruteforce, eta_formula, t_bruteforce, t_gt_formula,
    t_lt_formula, tau_formula, w_bruteforce, w_formula, CaseKind, FormulaVariant, PrefixOrder,
};
use crate::markov::{
    build_generator, entry_to_f64, gillespie, lump, mlq_stationary, solve_stationary, two_point,
    Distribution,
};
use crate::mlq::{
    enumerate_mlqs, link_distribution_with_order, sample_word, ProcessingOrder, SpeciesCount, Word,
};
use crate::rng;
use crate::scalar::{binom_or_zero, decimal_string, rat, QParam, Rational};

/// The check families the suite is organized into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    WeightSum,
    Rotation,
    OrderInvariance,
    Eta,
    TauW,
    TFormula,
    Lumping,
    MlqVsCtmc,
    CqVariants,
    Q0Reduction,
    Q1Uniformity,
    SamplerTv,
    Gillespie,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::WeightSum,
        Family::Rotation,
        Family::OrderInvariance,
        Family::Eta,
        Family::TauW,
        Family::TFormula,
        Family::Lumping,
        Family::MlqVsCtmc,
        Family::CqVariants,
        Family::Q0Reduction,
        Family::Q1Uniformity,
        Family::SamplerTv,
        Family::Gillespie,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::WeightSum => "weight_sum",
            Family::Rotation => "rotation",
            Family::OrderInvariance => "order_invariance",
            Family::Eta => "eta",
            Family::TauW => "tau_W",
            Family::TFormula => "T_formula",
            Family::Lumping => "lumping",
            Family::MlqVsCtmc => "mlq_vs_ctmc",
            Family::CqVariants => "cq_variants",
            Family::Q0Reduction => "q0_reduction",
            Family::Q1Uniformity => "q1_uniformity",
            Family::SamplerTv => "sampler_tv",
            Family::Gillespie => "gillespie",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

impl core::fmt::Display for Family {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Not run (a cap was exceeded); the reason is in `detail`.
    Skipped,
}

/// One executed (or skipped) comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub id: String,
    pub family: Family,
    pub params: Vec<(String, String)>,
    pub lhs: String,
    pub rhs: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

/// Per-family counts for the summary block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FamilyCounts {
    pub run: usize,
    pub failed: usize,
    pub skipped: usize,
}

/// Aggregated result of the suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub pass: bool,
    pub families: BTreeMap<Family, FamilyCounts>,
}

/// Which formula variant matched the chain oracle at one `(n, i, j, q)` with
/// `i < j`: "corrected", "printed", "both" or "neither".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjudication {
    pub n: i64,
    pub i: i64,
    pub j: i64,
    pub q: String,
    pub matched: &'static str,
}

/// Scale and determinism knobs of one suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Largest ring size for the enumeration- and chain-backed families.
    pub max_sites: usize,
    /// Asymmetry values the exact families sweep.
    pub q_list: Vec<QParam>,
    /// Seed for the sampler, the Gillespie run and the shuffled order.
    pub seed: u64,
    /// Run only these families when set.
    pub families: Option<Vec<Family>>,
    pub enumeration_cap: u64,
    pub linking_cap: u64,
    pub state_cap: u64,
    pub sampler_samples: u64,
    pub gillespie_horizon: f64,
    pub gillespie_burn_in: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            max_sites: 5,
            q_list: vec![
                QParam::zero(),
                QParam::from_ratio(1, 10).expect("valid"),
                QParam::from_ratio(1, 2).expect("valid"),
                QParam::from_ratio(9, 10).expect("valid"),
            ],
            seed: 1,
            families: None,
            enumeration_cap: crate::mlq::DEFAULT_ENUMERATION_CAP,
            linking_cap: crate::mlq::DEFAULT_LINKING_CAP,
            state_cap: crate::markov::DEFAULT_STATE_CAP,
            sampler_samples: 100_000,
            gillespie_horizon: 1_000_000.0,
            gillespie_burn_in: 10_000.0,
        }
    }
}

/// Machine-readable record of one suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub version: String,
    pub config: SuiteConfig,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
    pub variant_adjudication: Vec<Adjudication>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.summary.pass
    }
}

/// Sampler total-variation tolerance: 0.02.
pub fn sampler_tolerance() -> Rational {
    rat(1, 50)
}

/// Gillespie per-entry absolute tolerance: 0.01.
pub const GILLESPIE_TOLERANCE: f64 = 0.01;

fn q_slug(q: &QParam) -> String {
    q.to_string().replace('/', "-")
}

fn type_slug(m: &SpeciesCount) -> String {
    let mut s = String::new();
    for (k, c) in m.counts().iter().enumerate() {
        if k > 0 {
            s.push('.');
        }
        s.push_str(&c.to_string());
    }
    s
}

/// Key-value pairs recovered from a check id ("eta/s=1,t=2,k=4/q=1-2").
fn derive_params(id: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for segment in id.split('/').skip(1) {
        for part in segment.split(',') {
            if let Some((key, value)) = part.split_once('=') {
                let value = if key == "q" {
                    value.replace('-', "/")
                } else {
                    value.into()
                };
                out.push((key.into(), value));
            }
        }
    }
    out
}

/// All species tuples with ring size `1..=max_sites` and `2..=max_rows+1`
/// entries, in a fixed deterministic order, followed by the iden types up to
/// four rows.
pub fn check_types(max_sites: usize, max_rows: usize) -> Vec<SpeciesCount> {
    let mut out = Vec::new();
    for len in 2..=max_rows + 1 {
        for total in 1..=max_sites {
            let mut current = vec![0usize; len];
            compositions(total, 0, &mut current, &mut out);
        }
    }
    for n in [3usize, 4] {
        if n <= max_sites {
            let iden = SpeciesCount::iden(n);
            if !out.contains(&iden) {
                out.push(iden);
            }
        }
    }
    out
}

fn compositions(
    remaining: usize,
    pos: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<SpeciesCount>,
) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(SpeciesCount::new(current.clone()).expect("valid composition"));
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
}

struct Runner {
    config: SuiteConfig,
    checks: Vec<CheckResult>,
    adjudication: Vec<Adjudication>,
    dist_cache: BTreeMap<(Vec<usize>, QParam), Rc<Distribution>>,
}

impl Runner {
    fn push(&mut self, result: CheckResult) {
        self.checks.push(result);
    }

    fn exact(
        &mut self,
        family: Family,
        id: String,
        lhs: &Rational,
        rhs: &Rational,
        detail: String,
    ) {
        let params = derive_params(&id);
        self.push(CheckResult {
            id,
            family,
            params,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            outcome: if lhs == rhs {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            detail,
        });
    }

    /// Aggregate check: passes when `violations` is zero.
    fn aggregate(&mut self, family: Family, id: String, violations: usize, detail: String) {
        let params = derive_params(&id);
        self.push(CheckResult {
            id,
            family,
            params,
            lhs: violations.to_string(),
            rhs: "0".to_string(),
            outcome: if violations == 0 {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            detail,
        });
    }

    fn skip(&mut self, family: Family, id: String, reason: String) {
        let params = derive_params(&id);
        self.push(CheckResult {
            id,
            family,
            params,
            lhs: String::new(),
            rhs: String::new(),
            outcome: Outcome::Skipped,
            detail: reason,
        });
    }

    /// Skip on cap errors, fail loudly on anything else.
    fn guard<T>(&mut self, family: Family, id: &str, result: Result<T>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) if e.is_cap_exceeded() => {
                self.skip(family, id.to_string(), e.to_string());
                None
            }
            Err(e) => {
                self.push(CheckResult {
                    id: id.to_string(),
                    family,
                    params: Vec::new(),
                    lhs: String::new(),
                    rhs: String::new(),
                    outcome: Outcome::Fail,
                    detail: format!("unexpected error: {e}"),
                });
                None
            }
        }
    }

    fn stationary(&mut self, m: &SpeciesCount, q: &QParam) -> Result<Rc<Distribution>> {
        let key = (m.counts().to_vec(), q.clone());
        if let Some(d) = self.dist_cache.get(&key) {
            return Ok(Rc::clone(d));
        }
        let g = build_generator(m, q, self.config.state_cap)?;
        let d = Rc::new(solve_stationary(&g)?);
        self.dist_cache.insert(key, Rc::clone(&d));
        Ok(d)
    }

    /// q values for the two enumeration-heavy families: zero (cheap,
    /// deterministic linking) plus the first nonzero entry of `q_list`.
    fn heavy_qs(&self) -> Vec<QParam> {
        let mut out = Vec::new();
        if self.config.q_list.iter().any(|q| q.is_zero()) {
            out.push(QParam::zero());
        }
        if let Some(q) = self.config.q_list.iter().find(|q| !q.is_zero()) {
            out.push(q.clone());
        }
        if out.is_empty() {
            out.push(QParam::zero());
        }
        out
    }

    // ---- families ----------------------------------------------------

    fn weight_sum(&mut self) {
        let types = check_types(self.config.max_sites, 3);
        for m in &types {
            for q in &self.config.q_list.clone() {
                let id = format!("weight_sum/m={}/q={}", type_slug(m), q_slug(q));
                let Some(iter) = self.guard(
                    Family::WeightSum,
                    &id,
                    enumerate_mlqs(m, self.config.enumeration_cap),
                ) else {
                    continue;
                };
                let mut violations = 0usize;
                let mut count = 0usize;
                let mut failed_cap = false;
                for mlq in iter {
                    count += 1;
                    match link_distribution_with_order(
                        &mlq,
                        q,
                        ProcessingOrder::canonical(),
                        self.config.linking_cap,
                    ) {
                        Ok(dist) => {
                            if !crate::scalar::rational_sum(dist.values()).is_one() {
                                violations += 1;
                            }
                        }
                        Err(e) if e.is_cap_exceeded() => {
                            self.skip(Family::WeightSum, id.clone(), e.to_string());
                            failed_cap = true;
                            break;
                        }
                        Err(e) => {
                            violations += 1;
                            let _ = e;
                        }
                    }
                }
                if !failed_cap {
                    self.aggregate(
                        Family::WeightSum,
                        id,
                        violations,
                        format!("{count} multiline queues"),
                    );
                }
            }
        }
    }

    fn rotation(&mut self) {
        let types = check_types(self.config.max_sites, 3);
        for m in &types {
            let n = m.num_sites();
            for q in &self.heavy_qs() {
                let id = format!("rotation/m={}/q={}", type_slug(m), q_slug(q));
                let Some(iter) = self.guard(
                    Family::Rotation,
                    &id,
                    enumerate_mlqs(m, self.config.enumeration_cap),
                ) else {
                    continue;
                };
                let mut violations = 0usize;
                let mut count = 0usize;
                'queues: for mlq in iter {
                    count += 1;
                    let Ok(base) = link_distribution_with_order(
                        &mlq,
                        q,
                        ProcessingOrder::canonical(),
                        self.config.linking_cap,
                    ) else {
                        violations += 1;
                        continue;
                    };
                    for d in 0..n as i64 {
                        let expected: BTreeMap<Word, Rational> =
                            base.iter().map(|(w, p)| (w.rotate(d), p.clone())).collect();
                        match link_distribution_with_order(
                            &mlq.rotate(d),
                            q,
                            ProcessingOrder::canonical(),
                            self.config.linking_cap,
                        ) {
                            Ok(rotated) => {
                                if rotated != expected {
                                    violations += 1;
                                    continue 'queues;
                                }
                            }
                            Err(_) => {
                                violations += 1;
                                continue 'queues;
                            }
                        }
                    }
                }
                self.aggregate(
                    Family::Rotation,
                    id,
                    violations,
                    format!("{count} multiline queues, all shifts"),
                );
            }
        }
    }

    fn order_invariance(&mut self) {
        let types = check_types(self.config.max_sites, 3);
        let orders = [
            ProcessingOrder::SiteAscending,
            ProcessingOrder::SiteDescending,
            ProcessingOrder::Shuffled(self.config.seed.wrapping_add(0x9e37)),
        ];
        for m in &types {
            for q in &self.heavy_qs() {
                let id = format!("order_invariance/m={}/q={}", type_slug(m), q_slug(q));
                let Some(iter) = self.guard(
                    Family::OrderInvariance,
                    &id,
                    enumerate_mlqs(m, self.config.enumeration_cap),
                ) else {
                    continue;
                };
                let mut violations = 0usize;
                let mut count = 0usize;
                for mlq in iter {
                    count += 1;
                    let dists: Vec<_> = orders
                        .iter()
                        .map(|&o| link_distribution_with_order(&mlq, q, o, self.config.linking_cap))
                        .collect();
                    match (&dists[0], &dists[1], &dists[2]) {
                        (Ok(a), Ok(b), Ok(c)) => {
                            if a != b || a != c {
                                violations += 1;
                            }
                        }
                        _ => violations += 1,
                    }
                }
                self.aggregate(
                    Family::OrderInvariance,
                    id,
                    violations,
                    format!("{count} multiline queues, 3 orders"),
                );
            }
        }
    }

    fn eta(&mut self) {
        let max_k = self.config.max_sites as i64;
        for k in 3..=max_k {
            for s in 1..=k {
                for t in 1..=k {
                    if 2 * s + t > k {
                        continue;
                    }
                    let formula = match eta_formula(s, t, k) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    for q in &self.config.q_list.clone() {
                        let id = format!("eta/s={s},t={t},k={k}/q={}", q_slug(q));
                        let Some(brute) = self.guard(
                            Family::Eta,
                            &id,
                            eta_bruteforce(s, t, k, q, self.config.linking_cap),
                        ) else {
                            continue;
                        };
                        self.exact(Family::Eta, id, &brute, &formula, String::new());
                    }
                }
            }
        }
    }

    fn tau_w(&mut self) {
        let max_n = self.config.max_sites as i64;
        let q_list = self.config.q_list.clone();
        for n in 3..=max_n {
            for s in 0..=3.min(n) {
                for t in 0..=3.min(n) {
                    if s + t >= n {
                        continue;
                    }
                    for q in &q_list {
                        // brute-force vs closed form, all four kinds
                        for kind in [CaseKind::A, CaseKind::B, CaseKind::C, CaseKind::D] {
                            let id = format!(
                                "tau_W/W={},s={s},t={t},n={n}/q={}",
                                kind.as_str(),
                                q_slug(q)
                            );
                            let formula = match w_formula(kind, s, t, n, q) {
                                Ok(v) => v,
                                Err(_) => continue,
                            };
                            let Some(brute) = self.guard(
                                Family::TauW,
                                &id,
                                w_bruteforce(kind, s, t, n, q, self.config.linking_cap),
                            ) else {
                                continue;
                            };
                            self.exact(Family::TauW, id, &brute, &formula, String::new());
                        }
                        // case sums against the T closed forms
                        let id = format!("tau_W/sums,s={s},t={t},n={n}/q={}", q_slug(q));
                        let wa = w_formula(CaseKind::A, s, t, n, q).expect("in range");
                        let wb = w_formula(CaseKind::B, s, t, n, q).expect("in range");
                        let wd = w_formula(CaseKind::D, s, t, n, q).expect("in range");
                        let ab = &wa + &wb;
                        let cd = &wa + &wd;
                        let tg = t_gt_formula(s, t, n, q).expect("in range");
                        let tl = t_lt_formula(s, t, n, q).expect("in range");
                        let ok = usize::from(ab != tg) + usize::from(cd != tl);
                        self.aggregate(
                            Family::TauW,
                            id,
                            ok,
                            "W(A)+W(B) = T_> and W(C)+W(D) = T_<".to_string(),
                        );
                        // telescoping recursions
                        let id = format!("tau_W/telescope,s={s},t={t},n={n}/q={}", q_slug(q));
                        let violations = telescoping_violations(s, t, n, q);
                        self.aggregate(
                            Family::TauW,
                            id,
                            violations,
                            "binomial recursions for W^A, W^B, W^D".to_string(),
                        );
                    }
                }
            }
        }
    }

    fn t_formula(&mut self) {
        let max_n = self.config.max_sites as i64;
        let q_list = self.config.q_list.clone();
        for n in 2..=max_n {
            for s in 0..=n {
                for t in 0..=n - s {
                    for q in &q_list {
                        for (order, tag, formula) in [
                            (PrefixOrder::Gt, "gt", t_gt_formula(s, t, n, q)),
                            (PrefixOrder::Lt, "lt", t_lt_formula(s, t, n, q)),
                        ] {
                            let formula = match formula {
                                Ok(v) => v,
                                Err(_) => continue,
                            };
                            let id = format!("T_formula/T={tag},s={s},t={t},n={n}/q={}", q_slug(q));
                            let Some(brute) = self.guard(
                                Family::TFormula,
                                &id,
                                t_bruteforce(order, s, t, n, q, self.config.state_cap),
                            ) else {
                                continue;
                            };
                            self.exact(Family::TFormula, id, &brute, &formula, String::new());
                        }
                    }
                }
            }
        }
    }

    fn lumping(&mut self) {
        let max_n = self.config.max_sites;
        let q_list = self.config.q_list.clone();
        for n in 2..=max_n {
            let iden = SpeciesCount::iden(n);
            for q in &q_list {
                let full = match self.stationary(&iden, q) {
                    Ok(d) => d,
                    Err(e) => {
                        let id = format!("lumping/solve,n={n}/q={}", q_slug(q));
                        self.guard::<()>(Family::Lumping, &id, Err(e));
                        continue;
                    }
                };
                for s in 1..=n {
                    for t in 0..=n - s {
                        let id = format!("lumping/n={n},s={s},t={t}/q={}", q_slug(q));
                        let Some(projected) = self.guard(Family::Lumping, &id, lump(&full, s, t))
                        else {
                            continue;
                        };
                        let m = SpeciesCount::three_species(s, t, n).expect("in range");
                        let Ok(direct) = self.stationary(&m, q) else {
                            self.skip(Family::Lumping, id, "state cap".to_string());
                            continue;
                        };
                        let equal = &projected == direct.as_ref();
                        self.push(CheckResult {
                            id,
                            family: Family::Lumping,
                            params: Vec::new(),
                            lhs: "lump(stationary(iden))".to_string(),
                            rhs: "stationary(m_st)".to_string(),
                            outcome: if equal { Outcome::Pass } else { Outcome::Fail },
                            detail: format!("{} words", projected.len()),
                        });
                    }
                }
                // projection-principle double sums with oracle c-values
                let table = two_point(&full);
                for s in 0..=n {
                    for t in 0..=n - s {
                        let id = format!("lumping/double-sum,n={n},s={s},t={t}/q={}", q_slug(q));
                        let mut lt_sum = Rational::zero();
                        for j in s + t + 1..=n {
                            for i in s + 1..=s + t {
                                lt_sum += table.entry(i, j);
                            }
                        }
                        let mut gt_sum = Rational::zero();
                        for i in s + t + 1..=n {
                            for j in s + 1..=s + t {
                                gt_sum += table.entry(i, j);
                            }
                        }
                        let tl = t_lt_formula(s as i64, t as i64, n as i64, q).expect("in range");
                        let tg = t_gt_formula(s as i64, t as i64, n as i64, q).expect("in range");
                        let violations = usize::from(lt_sum != tl) + usize::from(gt_sum != tg);
                        self.aggregate(
                            Family::Lumping,
                            id,
                            violations,
                            "T_< and T_> as double sums of oracle correlations".to_string(),
                        );
                    }
                }
            }
        }
    }

    fn mlq_vs_ctmc(&mut self) {
        let types = check_types(self.config.max_sites, 3);
        let q_list = self.config.q_list.clone();
        for m in &types {
            for q in &q_list {
                let id = format!("mlq_vs_ctmc/m={}/q={}", type_slug(m), q_slug(q));
                let Some(from_mlq) = self.guard(
                    Family::MlqVsCtmc,
                    &id,
                    mlq_stationary(m, q, self.config.enumeration_cap, self.config.linking_cap),
                ) else {
                    continue;
                };
                let direct = match self.stationary(m, q) {
                    Ok(d) => d,
                    Err(e) => {
                        self.guard::<()>(Family::MlqVsCtmc, &id, Err(e));
                        continue;
                    }
                };
                let equal = &from_mlq == direct.as_ref();
                self.push(CheckResult {
                    id,
                    family: Family::MlqVsCtmc,
                    params: Vec::new(),
                    lhs: "mlq_stationary".to_string(),
                    rhs: "solve_stationary".to_string(),
                    outcome: if equal { Outcome::Pass } else { Outcome::Fail },
                    detail: format!("{} words", from_mlq.len()),
                });
            }
        }
    }

    fn cq_variants(&mut self) {
        let max_n = self.config.max_sites as i64;
        let q_list = self.config.q_list.clone();
        let mut printed_mismatch = 0usize;
        let mut corrected_mismatch = 0usize;
        for n in 2..=max_n {
            let iden = SpeciesCount::iden(n as usize);
            for q in &q_list {
                let id = format!("cq_variants/n={n}/q={}", q_slug(q));
                let table = match self.stationary(&iden, q) {
                    Ok(d) => two_point(&d),
                    Err(e) => {
                        self.guard::<()>(Family::CqVariants, &id, Err(e));
                        continue;
                    }
                };
                let mut violations = 0usize;
                for i in 1..=n {
                    for j in 1..=n {
                        if i == j {
                            continue;
                        }
                        let oracle = table.entry(i as usize, j as usize);
                        let corrected =
                            cq_formula(n, i, j, q, FormulaVariant::Corrected).expect("in range");
                        let pie = cq_via_pie(n, i, j, q).expect("in range");
                        if &corrected != oracle || &pie != oracle {
                            violations += 1;
                        }
                        if i < j {
                            if &corrected != oracle {
                                corrected_mismatch += 1;
                            }
                            if !q.is_zero() {
                                let printed_matches =
                                    match cq_formula(n, i, j, q, FormulaVariant::Printed) {
                                        Ok(v) => &v == oracle,
                                        Err(_) => false,
                                    };
                                if !printed_matches {
                                    printed_mismatch += 1;
                                }
                                let matched = match (&corrected == oracle, printed_matches) {
                                    (true, true) => "both",
                                    (true, false) => "corrected",
                                    (false, true) => "printed",
                                    (false, false) => "neither",
                                };
                                self.adjudication.push(Adjudication {
                                    n,
                                    i,
                                    j,
                                    q: q.to_string(),
                                    matched,
                                });
                            }
                        }
                    }
                }
                self.aggregate(
                    Family::CqVariants,
                    id,
                    violations,
                    "corrected = pie = oracle over all i != j".to_string(),
                );
            }
        }
        self.aggregate(
            Family::CqVariants,
            "cq_variants/corrected-matches-oracle".to_string(),
            corrected_mismatch,
            "corrected variant vs oracle, all i < j".to_string(),
        );
        let exists = printed_mismatch > 0;
        self.push(CheckResult {
            id: "cq_variants/printed-mismatch-exists".to_string(),
            family: Family::CqVariants,
            params: Vec::new(),
            lhs: printed_mismatch.to_string(),
            rhs: ">= 1".to_string(),
            outcome: if exists { Outcome::Pass } else { Outcome::Fail },
            detail: "the printed i<j branch must disagree with the oracle somewhere".to_string(),
        });
    }

    fn q0_reduction(&mut self) {
        let q0 = QParam::zero();
        for n in 2..=8i64 {
            let mut violations = 0usize;
            for i in 1..=n {
                for j in 1..=n {
                    if i == j {
                        continue;
                    }
                    let reduced =
                        cq_formula(n, i, j, &q0, FormulaVariant::Corrected).expect("in range");
                    if reduced != c0_formula(n, i, j).expect("in range") {
                        violations += 1;
                    }
                }
            }
            self.aggregate(
                Family::Q0Reduction,
                format!("q0_reduction/n={n}"),
                violations,
                "corrected formula at q=0 vs the totally asymmetric closed form".to_string(),
            );
        }
    }

    fn q1_uniformity(&mut self) {
        let one = QParam::one();
        for n in 2..=8i64 {
            let uniform = rat(1, n * (n - 1));
            let mut violations = 0usize;
            for i in 1..=n {
                for j in 1..=n {
                    if i == j {
                        continue;
                    }
                    let v = cq_formula(n, i, j, &one, FormulaVariant::Corrected).expect("in range");
                    if v != uniform {
                        violations += 1;
                    }
                }
            }
            self.aggregate(
                Family::Q1Uniformity,
                format!("q1_uniformity/formula,n={n}"),
                violations,
                "corrected formula at q=1 is 1/(n(n-1))".to_string(),
            );
        }
        // exact solve at q=1 is uniform over all states
        for n in 2..=self.config.max_sites {
            let id = format!("q1_uniformity/chain,n={n}");
            let Ok(d) = self.stationary(&SpeciesCount::iden(n), &one) else {
                self.skip(Family::Q1Uniformity, id, "state cap".to_string());
                continue;
            };
            let uniform = Rational::new(1.into(), (d.len() as u64).into());
            let violations = d.iter().filter(|(_, p)| **p != uniform).count();
            self.aggregate(
                Family::Q1Uniformity,
                id,
                violations,
                format!("{} states", d.len()),
            );
        }
    }

    fn sampler_tv(&mut self) {
        let m = SpeciesCount::new(vec![1, 1, 1]).expect("valid");
        let q = QParam::from_ratio(3, 10).expect("valid");
        let id = format!(
            "sampler_tv/m=1.1.1,q=3-10,samples={},seed={}",
            self.config.sampler_samples, self.config.seed
        );
        let exact = match self.stationary(&m, &q) {
            Ok(d) => d,
            Err(e) => {
                self.guard::<()>(Family::SamplerTv, &id, Err(e));
                return;
            }
        };
        let mut rng = rng::seeded(self.config.seed);
        let mut counts: BTreeMap<Word, u64> = BTreeMap::new();
        for _ in 0..self.config.sampler_samples {
            *counts.entry(sample_word(&m, &q, &mut rng)).or_insert(0) += 1;
        }
        let total = Rational::new((self.config.sampler_samples).into(), 1.into());
        let mut tv = Rational::zero();
        for (word, p) in exact.iter() {
            let observed = counts
                .get(word)
                .map(|&c| Rational::new(c.into(), 1.into()) / &total)
                .unwrap_or_else(Rational::zero);
            tv += (observed - p).abs();
        }
        tv /= Rational::new(2.into(), 1.into());
        let tolerance = sampler_tolerance();
        self.push(CheckResult {
            id,
            family: Family::SamplerTv,
            params: Vec::new(),
            lhs: decimal_string(&tv, 6),
            rhs: decimal_string(&tolerance, 6),
            outcome: if tv <= tolerance {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            detail: format!("total variation (exact value {tv})"),
        });
    }

    fn gillespie_check(&mut self) {
        let m = SpeciesCount::new(vec![1, 1, 1]).expect("valid");
        let q = QParam::from_ratio(1, 2).expect("valid");
        let id = format!(
            "gillespie/m=1.1.1,q=0.5,horizon={},seed={}",
            self.config.gillespie_horizon, self.config.seed
        );
        let exact = match self.stationary(&m, &q) {
            Ok(d) => two_point(&d),
            Err(e) => {
                self.guard::<()>(Family::Gillespie, &id, Err(e));
                return;
            }
        };
        let empirical = match gillespie(
            &m,
            0.5,
            self.config.gillespie_horizon,
            self.config.gillespie_burn_in,
            self.config.seed,
        ) {
            Ok(t) => t,
            Err(e) => {
                self.guard::<()>(Family::Gillespie, &id, Err(e));
                return;
            }
        };
        let mut worst = 0.0f64;
        for (i, j, estimate) in empirical.iter() {
            let err = (estimate - entry_to_f64(exact.entry(i, j))).abs();
            if err > worst {
                worst = err;
            }
        }
        self.push(CheckResult {
            id,
            family: Family::Gillespie,
            params: Vec::new(),
            lhs: format!("{worst:.6}"),
            rhs: format!("{GILLESPIE_TOLERANCE:.6}"),
            outcome: if worst <= GILLESPIE_TOLERANCE {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            detail: format!(
                "max |empirical - exact| over entries; {} events",
                empirical.events
            ),
        });
    }
}

/// Violations of the three binomial telescoping recursions at one
/// `(s, t, n, q)`: the unnormalized case weight must equal the binomial sum
/// of the no-trivial-link weights of smaller rings.
fn telescoping_violations(s: i64, t: i64, n: i64, q: &QParam) -> usize {
    let norm = Rational::from_integer(binom_or_zero(n, s) * binom_or_zero(n, s + t));
    let mut violations = 0usize;
    let wa = w_formula(CaseKind::A, s, t, n, q).expect("in range") * &norm;
    let mut sum = Rational::zero();
    for i in 0..=s {
        if t >= 1 && 2 * (s - i) + t < n - i {
            sum += Rational::from_integer(binom_or_zero(n - 2, i))
                * tau_formula(CaseKind::A, s - i, t, n - i, q).expect("in range");
        }
    }
    if wa != sum {
        violations += 1;
    }
    for kind in [CaseKind::B, CaseKind::D] {
        let w = w_formula(kind, s, t, n, q).expect("in range") * &norm;
        let mut sum = Rational::zero();
        for i in 0..=s - 1 {
            sum += Rational::from_integer(binom_or_zero(n - 2, i))
                * tau_formula(kind, s - i, t, n - i, q).expect("in range");
        }
        if w != sum {
            violations += 1;
        }
    }
    violations
}

/// Run the suite and assemble the report.
pub fn run_suite(config: &SuiteConfig) -> VerificationReport {
    let mut runner = Runner {
        config: config.clone(),
        checks: Vec::new(),
        adjudication: Vec::new(),
        dist_cache: BTreeMap::new(),
    };
    let enabled = |f: Family| -> bool {
        match &config.families {
            Some(list) => list.contains(&f),
            None => true,
        }
    };
    for family in Family::ALL {
        if !enabled(family) {
            continue;
        }
        match family {
            Family::WeightSum => runner.weight_sum(),
            Family::Rotation => runner.rotation(),
            Family::OrderInvariance => runner.order_invariance(),
            Family::Eta => runner.eta(),
            Family::TauW => runner.tau_w(),
            Family::TFormula => runner.t_formula(),
            Family::Lumping => runner.lumping(),
            Family::MlqVsCtmc => runner.mlq_vs_ctmc(),
            Family::CqVariants => runner.cq_variants(),
            Family::Q0Reduction => runner.q0_reduction(),
            Family::Q1Uniformity => runner.q1_uniformity(),
            Family::SamplerTv => runner.sampler_tv(),
            Family::Gillespie => runner.gillespie_check(),
        }
    }
    let mut families: BTreeMap<Family, FamilyCounts> = BTreeMap::new();
    for check in &runner.checks {
        let counts = families.entry(check.family).or_default();
        match check.outcome {
            Outcome::Pass => counts.run += 1,
            Outcome::Fail => {
                counts.run += 1;
                counts.failed += 1;
            }
            Outcome::Skipped => counts.skipped += 1,
        }
    }
    let pass = runner.checks.iter().all(|c| c.outcome != Outcome::Fail);
    VerificationReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        checks: runner.checks,
        summary: Summary { pass, families },
        variant_adjudication: runner.adjudication,
    }
}
