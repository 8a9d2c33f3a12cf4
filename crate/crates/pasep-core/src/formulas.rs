//! Closed-form evaluators for the two-point correlations and every
//! intermediate quantity they are assembled from, together with brute-force
//! counterparts over restricted multiline-queue classes.
//!
//! `c0_formula` is the totally asymmetric base case; `cq_formula` evaluates
//! the two branches of the general closed form (with a "printed" /
//! "corrected" variant switch for the `i < j` branch, see
//! [`FormulaVariant`]); `cq_via_pie` recomposes the correlation from the
//! `T_>` / `T_<` closed forms through inclusion-exclusion and serves as the
//! adjudicator between the variants. The `*_bruteforce` functions recompute
//! the same quantities from first principles (stationary solve or exhaustive
//! linking enumeration) and share nothing with the closed forms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::markov::{build_generator, solve_stationary};
use crate::mlq::{enumerate_linkings, MultilineQueue, ProcessingOrder, SpeciesCount};
use crate::scalar::{binom_or_zero, multinom, q_int, Int, QParam, Rational};

/// Which reading of the `i < j` correlation branch to evaluate.
///
/// The printed reading carries `q^(i-j)` (a negative power for `i < j`) in
/// its last term and a case-split constant term; the corrected reading uses
/// `q^(j-i)` and the constant `1/n²` — exactly what the inclusion-exclusion
/// composition of `T_<` produces. Both are kept so the verification report
/// can adjudicate them against the chain oracle; the `i > j` branch is
/// identical across variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaVariant {
    Printed,
    Corrected,
}

impl FormulaVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaVariant::Printed => "printed",
            FormulaVariant::Corrected => "corrected",
        }
    }
}

/// First-two-column pattern of a two-row multiline queue, read as
/// (row1/row2) at sites 1 and 2.
///
/// * `A`: (∘/∘, ∘/•), word prefix (3,2)
/// * `B`: (•/∘, ∘/•), word prefix (3,2)
/// * `C`: (∘/•, ∘/∘), word prefix (2,3)
/// * `D`: (∘/•, •/∘), word prefix (2,3)
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    A,
    B,
    C,
    D,
}

impl CaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseKind::A => "A",
            CaseKind::B => "B",
            CaseKind::C => "C",
            CaseKind::D => "D",
        }
    }

    /// (row1 site1, row2 site1, row1 site2, row2 site2) occupancies.
    fn pattern(self) -> (bool, bool, bool, bool) {
        match self {
            CaseKind::A => (false, false, false, true),
            CaseKind::B => (true, false, false, true),
            CaseKind::C => (false, true, false, false),
            CaseKind::D => (false, true, true, false),
        }
    }

    /// Word prefix the case contributes to.
    pub fn prefix(self) -> [u8; 2] {
        match self {
            CaseKind::A | CaseKind::B => [3, 2],
            CaseKind::C | CaseKind::D => [2, 3],
        }
    }
}

fn check_pair(n: i64, i: i64, j: i64) -> Result<()> {
    if n < 2 || i < 1 || j < 1 || i > n || j > n {
        return Err(Error::Domain(format!(
            "labels out of range: n={n}, i={i}, j={j}"
        )));
    }
    if i == j {
        return Err(Error::Domain(format!(
            "i = j = {i}: type iden has one particle per label"
        )));
    }
    Ok(())
}

fn over(num: Rational, n: i64) -> Rational {
    num / Rational::from_integer(Int::from(n * n * (n - 1)))
}

/// Two-point correlation of the totally asymmetric case (q = 0).
pub fn c0_formula(n: i64, i: i64, j: i64) -> Result<Rational> {
    check_pair(n, i, j)?;
    let n2 = Rational::new(Int::one(), Int::from(n * n));
    Ok(if i > j {
        // (i-j) / (n binom(n,2)) = 2(i-j) / (n^2 (n-1))
        over(Rational::from_integer(Int::from(2 * (i - j))), n)
    } else if i == j - 1 {
        n2 + over(Rational::from_integer(Int::from(i * (n - i))), n)
    } else {
        n2
    })
}

/// Two-point correlation `c_{i,j}^q(n)` from the closed form.
///
/// The `i > j` branch is the same for both variants. For `i < j` the printed
/// variant evaluates `q^(i-j)` as a genuine negative power, which is illegal
/// at `q = 0` and reported as such.
pub fn cq_formula(n: i64, i: i64, j: i64, q: &QParam, variant: FormulaVariant) -> Result<Rational> {
    check_pair(n, i, j)?;
    let qv = q.value();
    if i > j {
        let d = (i - j) as u64;
        // c0 - (i-j+2)(j-1)(n-i) q [i-j+1] / (n^2(n-1) [i-j+2])
        //    - j(i-j)(n-i+1) q [i-j-1] / (n^2(n-1) [i-j])
        //    + (i-j+1)(2j(n-i)+i+j-n-1) q [i-j] / (n^2(n-1) [i-j+1])
        let mut acc = c0_formula(n, i, j)?;
        acc -= over(
            Rational::from_integer(Int::from((i - j + 2) * (j - 1) * (n - i)))
                * qv
                * q_int(d + 1, q)
                / q_int(d + 2, q),
            n,
        );
        acc -= over(
            Rational::from_integer(Int::from(j * (i - j) * (n - i + 1))) * qv * q_int(d - 1, q)
                / q_int(d, q),
            n,
        );
        acc += over(
            Rational::from_integer(Int::from((i - j + 1) * (2 * j * (n - i) + i + j - n - 1)))
                * qv
                * q_int(d, q)
                / q_int(d + 1, q),
            n,
        );
        return Ok(acc);
    }
    let d = (j - i) as u64;
    let base = match variant {
        FormulaVariant::Printed => c0_formula(n, i, j)?,
        FormulaVariant::Corrected => Rational::new(Int::one(), Int::from(n * n)),
    };
    let mut acc = base;
    acc += over(
        Rational::from_integer(Int::from(i * (j - i) * (n - j + 1))) * q.pow(d as u32 - 1)
            / q_int(d, q),
        n,
    );
    acc += over(
        Rational::from_integer(Int::from((i - 1) * (j - i + 2) * (n - j))) * q.pow(d as u32 + 1)
            / q_int(d + 2, q),
        n,
    );
    let last_power = match variant {
        FormulaVariant::Corrected => q.pow(d as u32),
        FormulaVariant::Printed => {
            if q.is_zero() {
                return Err(Error::PrintedFormUndefined);
            }
            q.pow(d as u32).recip() // q^(i-j) with i < j
        }
    };
    acc -= over(
        Rational::from_integer(Int::from((j - i + 1) * (2 * i * (n - j) + i + j - n - 1)))
            * last_power
            / q_int(d + 1, q),
        n,
    );
    Ok(acc)
}

/// `T_>(s,t)(n)`: stationary probability that the three-species word of type
/// `(s, t, n-s-t)` starts `(3, 2)`, from the closed form.
pub fn t_gt_formula(s: i64, t: i64, n: i64, q: &QParam) -> Result<Rational> {
    check_st(s, t, n)?;
    let first = over(
        Rational::from_integer(Int::from(t * (n - s) * (n - s - t))),
        n,
    );
    let second = over(
        Rational::from_integer(Int::from(s * (t + 1) * (n - s - t)))
            * q.value()
            * q_int(t as u64, q)
            / q_int(t as u64 + 1, q),
        n,
    );
    Ok(first + second)
}

/// `T_<(s,t)(n)`: stationary probability of the prefix `(2, 3)`, closed form.
pub fn t_lt_formula(s: i64, t: i64, n: i64, q: &QParam) -> Result<Rational> {
    check_st(s, t, n)?;
    let first = over(
        Rational::from_integer(Int::from((s + t * n) * (n - s - t))),
        n,
    );
    let second = over(
        Rational::from_integer(Int::from(s * (t + 1) * (n - s - t))) * q.pow(t as u32)
            / q_int(t as u64 + 1, q),
        n,
    );
    Ok(first - second)
}

fn check_st(s: i64, t: i64, n: i64) -> Result<()> {
    if s < 0 || t < 0 || s + t > n || n < 2 {
        return Err(Error::Domain(format!(
            "(s,t,n) = ({s},{t},{n}) out of range"
        )));
    }
    Ok(())
}

/// Prefix order selecting `T_>` or `T_<`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefixOrder {
    /// word starts (3, 2)
    Gt,
    /// word starts (2, 3)
    Lt,
}

/// `T` read directly off the exact stationary distribution of the
/// three-species chain — independent of the multiline-queue machinery, so it
/// adjudicates the closed forms.
pub fn t_bruteforce(
    order: PrefixOrder,
    s: i64,
    t: i64,
    n: i64,
    q: &QParam,
    state_cap: u64,
) -> Result<Rational> {
    check_st(s, t, n)?;
    let m = SpeciesCount::three_species(s as usize, t as usize, n as usize)?;
    let d = solve_stationary(&build_generator(&m, q, state_cap)?)?;
    let prefix: [u8; 2] = match order {
        PrefixOrder::Gt => [3, 2],
        PrefixOrder::Lt => [2, 3],
    };
    Ok(d.prefix_prob(&prefix))
}

/// `η_{s,t}(k) = t/(s+t) · multinom(k-1; s, s+t-1, k-2s-t)` — independent of
/// q. Domain: `s, t >= 1` and `2s + t <= k` (`s = 0` is additionally
/// admitted; it is what the telescoping identities substitute at their last
/// term).
pub fn eta_formula(s: i64, t: i64, k: i64) -> Result<Rational> {
    if s < 0 || t < 1 || 2 * s + t > k {
        return Err(Error::Domain(format!(
            "eta({s},{t},{k}) needs s >= 0, t >= 1, 2s+t <= k"
        )));
    }
    let count = multinom(k - 1, &[s, s + t - 1, k - 2 * s - t])?;
    Ok(Rational::new(Int::from(t), Int::from(s + t)) * Rational::from_integer(count))
}

/// Number of queues in the η enumeration class: two disjoint rows of type
/// `(s, t, k-s-t)` whose first column is (∘/•).
pub fn theta_count(s: i64, t: i64, k: i64) -> Result<Int> {
    if s < 0 || t < 1 || 2 * s + t > k {
        return Err(Error::Domain(format!("theta({s},{t},{k}) out of range")));
    }
    multinom(k - 1, &[s, s + t - 1, k - 2 * s - t])
}

fn subsets_of(sites: &[usize], size: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..size).collect();
    if size > sites.len() {
        return out;
    }
    loop {
        out.push(combo.iter().fold(0u64, |m, &i| m | 1 << sites[i]));
        // next combination over indices into `sites`
        let k = combo.len();
        if k == 0 {
            break;
        }
        let mut i = k;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if combo[i] < sites.len() - (k - i) {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    out
}

/// η by exhaustive enumeration: all two-row queues of type `(s, t, k-s-t)`
/// with no doubly-occupied column and first column (∘/•), total weight of the
/// linkings projecting to a word that starts with 2.
pub fn eta_bruteforce(s: i64, t: i64, k: i64, q: &QParam, linking_cap: u64) -> Result<Rational> {
    if s < 0 || t < 1 || 2 * s + t > k {
        return Err(Error::Domain(format!("eta({s},{t},{k}) out of range")));
    }
    let n = k as usize;
    let (s, t) = (s as usize, t as usize);
    let mut total = Rational::zero();
    let free: Vec<usize> = (1..n).collect();
    for row1 in subsets_of(&free, s) {
        let remaining: Vec<usize> = (1..n).filter(|&site| row1 >> site & 1 == 0).collect();
        for rest2 in subsets_of(&remaining, s + t - 1) {
            let row2 = rest2 | 1; // site 1 is always (∘/•)
            let mlq = MultilineQueue::new(n, vec![row1, row2])?;
            for linked in enumerate_linkings(&mlq, q, ProcessingOrder::canonical(), linking_cap)? {
                if linked.word.labels()[0] == 2 {
                    total += linked.weight;
                }
            }
        }
    }
    Ok(total)
}

/// The no-trivial-link case weights `τ` for kinds A, B and D.
///
/// * `τ^A_{s,t}(n) = η_{s,t}(n-1)`
/// * `τ^B_{s,t}(n) = (t+1)/(s+t) binom(n-2,s-1) binom(n-s-1,s+t-1) (1 - 1/[t+1]_q)`
/// * `τ^D_{s,t}(n)` — the same prefactor times `(1 - q^t/[t+1]_q)`
pub fn tau_formula(kind: CaseKind, s: i64, t: i64, n: i64, q: &QParam) -> Result<Rational> {
    match kind {
        CaseKind::A => eta_formula(s, t, n - 1),
        CaseKind::B | CaseKind::D => {
            if s < 1 || t < 0 || s + t > n {
                return Err(Error::Domain(format!(
                    "tau^{}({s},{t},{n}) needs s >= 1, t >= 0, s+t <= n",
                    kind.as_str()
                )));
            }
            let prefactor = Rational::new(Int::from(t + 1), Int::from(s + t))
                * Rational::from_integer(binom_or_zero(n - 2, s - 1))
                * Rational::from_integer(binom_or_zero(n - s - 1, s + t - 1));
            let tail = match kind {
                CaseKind::B => Rational::one() - q_int(t as u64 + 1, q).recip(),
                CaseKind::D => Rational::one() - q.pow(t as u32) / q_int(t as u64 + 1, q),
                _ => unreachable!(),
            };
            Ok(prefactor * tail)
        }
        CaseKind::C => Err(Error::Domain(
            "tau is defined for kinds A, B, D only".into(),
        )),
    }
}

/// Normalized case weights `W^X_{s,t}(n) / (binom(n,s) binom(n,s+t))` from
/// the closed forms; kind C delegates to A.
pub fn w_formula(kind: CaseKind, s: i64, t: i64, n: i64, q: &QParam) -> Result<Rational> {
    check_st(s, t, n)?;
    match kind {
        CaseKind::A | CaseKind::C => Ok(over(
            Rational::from_integer(Int::from(t * (n - s) * (n - s - t))),
            n,
        )),
        CaseKind::B => Ok(over(
            Rational::from_integer(Int::from(s * (t + 1) * (n - s - t)))
                * (Rational::one() - q_int(t as u64 + 1, q).recip()),
            n,
        )),
        CaseKind::D => Ok(over(
            Rational::from_integer(Int::from(s * (t + 1) * (n - s - t)))
                * (Rational::one() - q.pow(t as u32) / q_int(t as u64 + 1, q)),
            n,
        )),
    }
}

/// Case weight by exhaustive enumeration: all queues of type `(s, t, n-s-t)`
/// whose first two columns match the kind's pattern, total weight of the
/// linkings projecting to the kind's prefix, normalized by
/// `binom(n,s) binom(n,s+t)`.
pub fn w_bruteforce(
    kind: CaseKind,
    s: i64,
    t: i64,
    n: i64,
    q: &QParam,
    linking_cap: u64,
) -> Result<Rational> {
    check_st(s, t, n)?;
    let n_sites = n as usize;
    if n_sites < 2 {
        return Err(Error::Domain(
            "case patterns need at least two sites".into(),
        ));
    }
    let (su, stu) = (s as usize, (s + t) as usize);
    let (r1s1, r2s1, r1s2, r2s2) = kind.pattern();
    let fixed1 = usize::from(r1s1) + usize::from(r1s2);
    let fixed2 = usize::from(r2s1) + usize::from(r2s2);
    if su < fixed1 || stu < fixed2 {
        // not enough particles to realize the pattern: empty class
        return Ok(Rational::zero());
    }
    let prefix = kind.prefix();
    let base1 = u64::from(r1s1) | u64::from(r1s2) << 1;
    let base2 = u64::from(r2s1) | u64::from(r2s2) << 1;
    let free: Vec<usize> = (2..n_sites).collect();
    let mut total = Rational::zero();
    for rest1 in subsets_of(&free, su - fixed1) {
        for rest2 in subsets_of(&free, stu - fixed2) {
            let mlq = MultilineQueue::new(n_sites, vec![base1 | rest1, base2 | rest2])?;
            for linked in enumerate_linkings(&mlq, q, ProcessingOrder::canonical(), linking_cap)? {
                if linked.word.starts_with(&prefix) {
                    total += linked.weight;
                }
            }
        }
    }
    let norm = Rational::from_integer(binom_or_zero(n, s) * binom_or_zero(n, s + t));
    Ok(total / norm)
}

/// The correlation recomposed from the `T` closed forms through the
/// four-term inclusion-exclusion — the derivation-faithful evaluator.
pub fn cq_via_pie(n: i64, i: i64, j: i64, q: &QParam) -> Result<Rational> {
    check_pair(n, i, j)?;
    Ok(if i > j {
        t_gt_formula(j - 1, i - j, n, q)?
            - t_gt_formula(j, i - j - 1, n, q)?
            - t_gt_formula(j - 1, i - j + 1, n, q)?
            + t_gt_formula(j, i - j, n, q)?
    } else {
        t_lt_formula(i - 1, j - i, n, q)?
            - t_lt_formula(i, j - i - 1, n, q)?
            - t_lt_formula(i - 1, j - i + 1, n, q)?
            + t_lt_formula(i, j - i, n, q)?
    })
}
