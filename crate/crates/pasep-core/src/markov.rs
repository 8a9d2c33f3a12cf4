//! Brute-force ground truth: the PASEP generator, its exact stationary
//! distribution, lumping, two-point marginals and a Gillespie simulator.
//!
//! Site `k` swaps with site `k+1` (cyclically): the pair `(i, j)` becomes
//! `(j, i)` at rate 1 when `i > j` and at rate `q` when `i < j`. The solver
//! returns exact rationals; the residual `πG` is verified to be identically
//! zero before a distribution is handed out.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::solve_exact;
use crate::mlq::{self, SpeciesCount, Word};
use crate::rng;
use crate::scalar::{Int, QParam, Rational};

/// Default cap on the number of Markov states.
pub const DEFAULT_STATE_CAP: u64 = 100_000;

/// Above this many states the solver first tries the rotation-symmetry
/// reduction; the lumped structure is verified while it is built and the
/// lifted solution is re-checked against the full generator.
const DIRECT_SOLVE_LIMIT: usize = 200;

/// The PASEP generator on all words of one type, states in lexicographic
/// order. Off-diagonal rates are stored sparsely; each diagonal entry is the
/// negated sum of its row, so rows sum to zero by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    species: SpeciesCount,
    q: QParam,
    states: Vec<Word>,
    /// `rates[i]` lists `(j, rate)` with `j != i`, ascending in `j`,
    /// parallel transitions already accumulated.
    rates: Vec<Vec<(usize, Rational)>>,
}

impl Generator {
    pub fn species(&self) -> &SpeciesCount {
        &self.species
    }

    pub fn q(&self) -> &QParam {
        &self.q
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn rates_from(&self, state: usize) -> &[(usize, Rational)] {
        &self.rates[state]
    }

    /// Total outflow rate of a state (the negated diagonal entry).
    pub fn total_outflow(&self, state: usize) -> Rational {
        let mut acc = Rational::zero();
        for (_, rate) in &self.rates[state] {
            acc += rate;
        }
        acc
    }

    fn state_index(&self, word: &Word) -> usize {
        self.states
            .binary_search(word)
            .expect("word of the generator's type")
    }

    /// Artificial generator over dummy states, for exercising the solver's
    /// reducible-chain paths (real exclusion processes are irreducible).
    #[cfg(test)]
    fn synthetic(rates: Vec<Vec<(usize, Rational)>>) -> Generator {
        let n = rates.len();
        let states = (0..n).map(|i| Word::new(vec![i as u8 + 1])).collect();
        Generator {
            species: SpeciesCount::new(vec![1, 0]).expect("valid"),
            q: QParam::zero(),
            states,
            rates,
        }
    }
}

/// Build the generator of the multispecies PASEP of type `m`.
pub fn build_generator(m: &SpeciesCount, q: &QParam, state_cap: u64) -> Result<Generator> {
    let count = m.word_count();
    if count > state_cap as u128 {
        return Err(Error::StateSpaceTooLarge {
            states: count,
            cap: state_cap,
        });
    }
    let states = m.words();
    let n_sites = m.num_sites();
    let index: BTreeMap<&Word, usize> = states.iter().zip(0..).collect();
    let mut rates: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); states.len()];
    for (i, word) in states.iter().enumerate() {
        let labels = word.labels();
        let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
        for k in 0..n_sites {
            let k1 = (k + 1) % n_sites;
            let (a, b) = (labels[k], labels[k1]);
            if a == b {
                continue;
            }
            let rate = if a > b {
                Rational::one()
            } else {
                q.value().clone()
            };
            if rate.is_zero() {
                continue;
            }
            let mut swapped = labels.to_vec();
            swapped.swap(k, k1);
            let j = index[&Word::new(swapped)];
            row.entry(j).and_modify(|r| *r += &rate).or_insert(rate);
        }
        rates[i] = row.into_iter().collect();
    }
    Ok(Generator {
        species: m.clone(),
        q: q.clone(),
        states,
        rates,
    })
}

/// Exact probability vector over all words of one type, in lexicographic
/// state order. Probabilities are nonnegative and sum to exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    species: SpeciesCount,
    states: Vec<Word>,
    probs: Vec<Rational>,
}

impl Distribution {
    /// Wrap a probability vector, checking normalization and sign.
    pub fn new(species: SpeciesCount, states: Vec<Word>, probs: Vec<Rational>) -> Result<Self> {
        if states.len() != probs.len() {
            return Err(Error::Internal("probability vector length mismatch".into()));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::Internal("negative probability".into()));
        }
        let total: Rational = crate::scalar::rational_sum(probs.iter());
        if !total.is_one() {
            return Err(Error::Internal(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Distribution {
            species,
            states,
            probs,
        })
    }

    pub fn species(&self) -> &SpeciesCount {
        &self.species
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.states.iter().zip(self.probs.iter())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Probability of one word (zero for words of the wrong type).
    pub fn prob(&self, word: &Word) -> Rational {
        match self.states.binary_search(word) {
            Ok(i) => self.probs[i].clone(),
            Err(_) => Rational::zero(),
        }
    }

    /// Probability that the word starts with the given prefix.
    pub fn prefix_prob(&self, prefix: &[u8]) -> Rational {
        let mut acc = Rational::zero();
        for (w, p) in self.iter() {
            if w.starts_with(prefix) {
                acc += p;
            }
        }
        acc
    }
}

/// Two-point table: `entry(i, j)` is the stationary probability that sites 1
/// and 2 hold labels `i` and `j`, for `i, j` in `1..=n+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationTable {
    n_labels: usize,
    entries: Vec<Rational>,
}

impl CorrelationTable {
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        assert!((1..=self.n_labels).contains(&i) && (1..=self.n_labels).contains(&j));
        &self.entries[(i - 1) * self.n_labels + (j - 1)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        let n = self.n_labels;
        self.entries
            .iter()
            .enumerate()
            .map(move |(k, v)| (k / n + 1, k % n + 1, v))
    }
}

/// Marginal of the first two sites.
pub fn two_point(d: &Distribution) -> CorrelationTable {
    let n_labels = d.species.n_species() + 1;
    let mut entries = vec![Rational::zero(); n_labels * n_labels];
    for (w, p) in d.iter() {
        let (i, j) = (w.labels()[0] as usize, w.labels()[1] as usize);
        entries[(i - 1) * n_labels + (j - 1)] += p;
    }
    CorrelationTable { n_labels, entries }
}

/// Strongly connected components by an iterative Tarjan pass; returns the
/// component id per state and the component count.
fn strongly_connected_components(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = adj.len();
    let mut comp = vec![usize::MAX; n];
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut n_comps = 0usize;
    // explicit DFS stack: (node, next child position)
    let mut call: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        call.push((start, 0));
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = n_comps;
                        if w == v {
                            break;
                        }
                    }
                    n_comps += 1;
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    (comp, n_comps)
}

/// Indices of the unique closed communicating class (no outgoing rates).
/// Errors when the closed class is not unique.
fn closed_class(g: &Generator) -> Result<Vec<usize>> {
    let adj: Vec<Vec<usize>> = g
        .rates
        .iter()
        .map(|row| row.iter().map(|&(j, _)| j).collect())
        .collect();
    let (comp, n_comps) = strongly_connected_components(&adj);
    let mut comp_closed = vec![true; n_comps];
    for (i, row) in g.rates.iter().enumerate() {
        for &(j, _) in row {
            if comp[j] != comp[i] {
                comp_closed[comp[i]] = false;
            }
        }
    }
    let closed: Vec<usize> = (0..n_comps).filter(|&c| comp_closed[c]).collect();
    if closed.len() != 1 {
        return Err(Error::NonUniqueStationary {
            closed_classes: closed.len(),
        });
    }
    Ok((0..g.n_states())
        .filter(|&i| comp[i] == closed[0])
        .collect())
}

/// Clear the denominator of `q` so all rates become integers, and assemble
/// the system `[1...1; scaled G^T] x = e_1` restricted to the given states.
fn stationary_system(g: &Generator, states: &[usize]) -> (Vec<Vec<Int>>, Vec<Int>) {
    let m = states.len();
    let mut pos = vec![usize::MAX; g.n_states()];
    for (slot, &s) in states.iter().enumerate() {
        pos[s] = slot;
    }
    let scale = g.q.value().denom().clone();
    let scale_rate = |r: &Rational| -> Int {
        let scaled = r * Rational::from_integer(scale.clone());
        debug_assert!(scaled.denom().is_one());
        scaled.to_integer()
    };
    let mut a = vec![vec![Int::zero(); m]; m + 1];
    let mut b = vec![Int::zero(); m + 1];
    a[0].fill(Int::one());
    b[0] = Int::one();
    for (col, &i) in states.iter().enumerate() {
        let mut diag = Int::zero();
        for &(j, ref rate) in &g.rates[i] {
            let slot = pos[j];
            debug_assert!(slot != usize::MAX, "closed class leaks probability");
            let r = scale_rate(rate);
            diag -= &r;
            // π_i flowing into j: entry (row j, col i) of G^T
            a[slot + 1][col] += r;
        }
        a[col + 1][col] += diag;
    }
    (a, b)
}

/// Exact residual check: `π G = 0`, `Σ π = 1`, `π >= 0`.
fn is_stationary(g: &Generator, probs: &[Rational]) -> bool {
    if probs.iter().any(|p| p.is_negative()) {
        return false;
    }
    if !crate::scalar::rational_sum(probs.iter()).is_one() {
        return false;
    }
    let mut residual = vec![Rational::zero(); g.n_states()];
    for (i, row) in g.rates.iter().enumerate() {
        let mut outflow = Rational::zero();
        for &(j, ref rate) in row {
            residual[j] += &probs[i] * rate;
            outflow += rate;
        }
        residual[i] -= &probs[i] * outflow;
    }
    residual.iter().all(|r| r.is_zero())
}

/// Rotation-orbit lumping of the closed class: orbit id per state, orbit
/// sizes, and the lumped rate rows. `None` when the partition fails the exact
/// lumpability check (constant per-orbit rate sums).
#[allow(clippy::type_complexity)]
fn rotation_lumping(
    g: &Generator,
    states: &[usize],
) -> Option<(Vec<usize>, Vec<usize>, Vec<Vec<(usize, Rational)>>)> {
    let n_states = g.n_states();
    let mut member = vec![false; n_states];
    for &s in states {
        member[s] = true;
    }
    let mut orbit = vec![usize::MAX; n_states];
    let mut orbit_sizes: Vec<usize> = Vec::new();
    for &s in states {
        if orbit[s] != usize::MAX {
            continue;
        }
        let id = orbit_sizes.len();
        let mut size = 0usize;
        let mut w = g.states[s].clone();
        loop {
            let idx = g.state_index(&w);
            if !member[idx] {
                return None; // rotation leaves the closed class
            }
            if orbit[idx] == usize::MAX {
                orbit[idx] = id;
                size += 1;
            }
            w = w.rotate(1);
            if w == g.states[s] {
                break;
            }
        }
        orbit_sizes.push(size);
    }
    let n_orbits = orbit_sizes.len();
    let mut lumped: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n_orbits];
    let mut seen = vec![false; n_orbits];
    for &s in states {
        let o = orbit[s];
        let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
        for &(j, ref rate) in &g.rates[s] {
            *row.entry(orbit[j]).or_insert_with(Rational::zero) += rate;
        }
        let row: Vec<(usize, Rational)> = row.into_iter().collect();
        if seen[o] {
            if lumped[o] != row {
                return None; // not lumpable
            }
        } else {
            lumped[o] = row;
            seen[o] = true;
        }
    }
    Some((orbit, orbit_sizes, lumped))
}

/// The unique stationary distribution of the generator, exact.
///
/// For `q = 0` part of the state space can be transient: the solver restricts
/// to the unique closed communicating class (errors if there are several) and
/// assigns probability 0 to transient states. Large chains go through the
/// verified rotation-orbit reduction first; every returned distribution has
/// passed the exact `πG = 0` residual check against the full generator.
pub fn solve_stationary(g: &Generator) -> Result<Distribution> {
    let closed = closed_class(g)?;
    let probs = if closed.len() > DIRECT_SOLVE_LIMIT {
        match try_orbit_solve(g, &closed) {
            Some(p) if is_stationary(g, &p) => p,
            _ => direct_solve(g, &closed)?,
        }
    } else {
        direct_solve(g, &closed)?
    };
    if !is_stationary(g, &probs) {
        return Err(Error::Internal(
            "solver produced a non-stationary vector".into(),
        ));
    }
    Distribution::new(g.species.clone(), g.states.clone(), probs)
}

fn direct_solve(g: &Generator, closed: &[usize]) -> Result<Vec<Rational>> {
    let (a, b) = stationary_system(g, closed);
    let x = solve_exact(a, b).ok_or(Error::NonUniqueStationary { closed_classes: 1 })?;
    let mut probs = vec![Rational::zero(); g.n_states()];
    for (slot, &s) in closed.iter().enumerate() {
        probs[s] = x[slot].clone();
    }
    Ok(probs)
}

fn try_orbit_solve(g: &Generator, closed: &[usize]) -> Option<Vec<Rational>> {
    let (orbit, orbit_sizes, lumped) = rotation_lumping(g, closed)?;
    let n_orbits = orbit_sizes.len();
    // assemble [1...1; L^T] y = e_1 for the lumped chain
    let mut a = vec![vec![Int::zero(); n_orbits]; n_orbits + 1];
    let mut b = vec![Int::zero(); n_orbits + 1];
    let scale = g.q.value().denom().clone();
    a[0].fill(Int::one());
    b[0] = Int::one();
    for (o, row) in lumped.iter().enumerate() {
        let mut diag = Int::zero();
        for &(p, ref rate) in row {
            let scaled = rate * Rational::from_integer(scale.clone());
            if !scaled.denom().is_one() {
                return None;
            }
            let r = scaled.to_integer();
            diag -= &r;
            a[p + 1][o] += r;
        }
        a[o + 1][o] += diag;
    }
    let y = solve_exact(a, b)?;
    let mut probs = vec![Rational::zero(); g.n_states()];
    for &s in closed {
        let o = orbit[s];
        probs[s] = &y[o] / Rational::from_integer(Int::from(orbit_sizes[o] as u64));
    }
    Some(probs)
}

/// Letterwise projection of the `iden(n)` stationary law onto the
/// three-species type `(s, t, n-s-t)`: labels `1..=s` map to 1,
/// `s+1..=s+t` to 2 and the rest to 3, probabilities summed over fibers.
pub fn lump(d: &Distribution, s: usize, t: usize) -> Result<Distribution> {
    let n = d.species.n_species();
    if d.species != SpeciesCount::iden(n) {
        return Err(Error::Domain(
            "lumping is defined on iden(n) distributions".into(),
        ));
    }
    if s < 1 || s + t > n {
        return Err(Error::Domain(format!(
            "lump needs 1 <= s, s+t <= n; got s={s}, t={t}, n={n}"
        )));
    }
    let target = SpeciesCount::three_species(s, t, n)?;
    let states = target.words();
    let mut probs = vec![Rational::zero(); states.len()];
    for (w, p) in d.iter() {
        let image: Vec<u8> = w
            .labels()
            .iter()
            .map(|&l| {
                let l = l as usize;
                if l <= s {
                    1
                } else if l <= s + t {
                    2
                } else {
                    3
                }
            })
            .collect();
        let idx = states
            .binary_search(&Word::new(image))
            .expect("image word of target type");
        probs[idx] += p;
    }
    Distribution::new(target, states, probs)
}

/// The stationary law built from the multiline-queue side: the average of
/// [`mlq::link_distribution`] over all queues of the type.
pub fn mlq_stationary(
    m: &SpeciesCount,
    q: &QParam,
    enumeration_cap: u64,
    linking_cap: u64,
) -> Result<Distribution> {
    let states = m.words();
    let mut probs = vec![Rational::zero(); states.len()];
    let mut n_mlqs: u64 = 0;
    for queue in mlq::enumerate_mlqs(m, enumeration_cap)? {
        n_mlqs += 1;
        for (word, weight) in mlq::link_distribution_with_order(
            &queue,
            q,
            mlq::ProcessingOrder::canonical(),
            linking_cap,
        )? {
            let idx = states
                .binary_search(&word)
                .expect("projected word of the type");
            probs[idx] += weight;
        }
    }
    let count = Rational::from_integer(Int::from(n_mlqs));
    for p in probs.iter_mut() {
        *p /= &count;
    }
    Distribution::new(m.clone(), states, probs)
}

/// Time-averaged two-point indicator estimates from a continuous-time
/// simulation, the only floating-point surface of the crate.
#[derive(Debug, Clone)]
pub struct EmpiricalTable {
    n_labels: usize,
    entries: Vec<f64>,
    /// Number of jump events inside the averaging window.
    pub events: u64,
}

impl EmpiricalTable {
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!((1..=self.n_labels).contains(&i) && (1..=self.n_labels).contains(&j));
        self.entries[(i - 1) * self.n_labels + (j - 1)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_labels;
        self.entries
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k / n + 1, k % n + 1, v))
    }
}

/// Gillespie direct-method simulation of the PASEP of type `m` with decimal
/// asymmetry `q`, time-averaging the two-point indicators over
/// `[burn_in, horizon]`. Deterministic per seed.
pub fn gillespie(
    m: &SpeciesCount,
    q: f64,
    horizon: f64,
    burn_in: f64,
    seed: u64,
) -> Result<EmpiricalTable> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("decimal q = {q} outside [0, 1]")));
    }
    if horizon.is_nan() || burn_in.is_nan() || horizon <= burn_in || burn_in < 0.0 {
        return Err(Error::Domain(format!(
            "need horizon > burn_in >= 0; got horizon = {horizon}, burn_in = {burn_in}"
        )));
    }
    let n_sites = m.num_sites();
    let n_labels = m.n_species() + 1;
    let mut state: Vec<u8> = Vec::with_capacity(n_sites);
    for (label, &mult) in m.counts().iter().enumerate() {
        for _ in 0..mult {
            state.push(label as u8 + 1);
        }
    }
    let mut rng = rng::seeded(seed);
    let mut entries = vec![0.0f64; n_labels * n_labels];
    let mut events: u64 = 0;
    let mut now = 0.0f64;
    let window = horizon - burn_in;
    let mut pair_rates = vec![0.0f64; n_sites];
    loop {
        let mut total = 0.0;
        for k in 0..n_sites {
            let (a, b) = (state[k], state[(k + 1) % n_sites]);
            let r = if a == b {
                0.0
            } else if a > b {
                1.0
            } else {
                q
            };
            pair_rates[k] = r;
            total += r;
        }
        if total == 0.0 {
            // absorbing (e.g. q = 0 with a single sorted descent-free word):
            // the current state holds for the rest of the window
            let hold = horizon - now.max(burn_in);
            if hold > 0.0 {
                let (i, j) = (state[0] as usize, state[1] as usize);
                entries[(i - 1) * n_labels + (j - 1)] += hold / window;
            }
            break;
        }
        let u = rng::unit_f64(&mut rng).max(f64::MIN_POSITIVE);
        let dt = -libm::log(u) / total;
        let next = now + dt;
        let overlap = next.min(horizon) - now.max(burn_in);
        if overlap > 0.0 {
            let (i, j) = (state[0] as usize, state[1] as usize);
            entries[(i - 1) * n_labels + (j - 1)] += overlap / window;
        }
        if next >= horizon {
            break;
        }
        now = next;
        let mut pick = rng::unit_f64(&mut rng) * total;
        let mut chosen = n_sites - 1;
        for (k, &r) in pair_rates.iter().enumerate() {
            if pick < r {
                chosen = k;
                break;
            }
            pick -= r;
        }
        let k1 = (chosen + 1) % n_sites;
        state.swap(chosen, k1);
        if now >= burn_in {
            events += 1;
        }
    }
    Ok(EmpiricalTable {
        n_labels,
        entries,
        events,
    })
}

/// Decimal value of an exact entry, for comparisons with empirical tables.
pub fn entry_to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
