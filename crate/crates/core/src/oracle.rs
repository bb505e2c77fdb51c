//! Classical hidden-variable models of the two-source network and searches
//! for their largest bilocality value.
//!
//! A bilocal model draws λ1 ~ p1 and λ2 ~ p2 independently; A answers from
//! (xA, λ1), the central node from (xB, λ1, λ2) and C from (xC, λ2). Mixed
//! models are mixtures of deterministic response tables, so searching over
//! deterministic tables and product distributions covers the whole set.

use crate::error::{Error, Result};
use crate::quantum::{biloc_functional, settings_bits, Behavior, Convention, FunctionalResult};

const BOUND_TOL: f64 = 1e-9;
const DIST_TOL: f64 = 1e-12;

/// Largest hidden-variable cardinality the exhaustive search accepts.
pub const MAX_EXHAUSTIVE_CARD: usize = 4;

/// Deterministic responses `[bit for x = 0, bit for x = 1]` per hidden value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    card1: usize,
    card2: usize,
    resp_a: Vec<[u8; 2]>,
    /// indexed `λ1 * card2 + λ2`
    resp_b: Vec<[u8; 2]>,
    resp_c: Vec<[u8; 2]>,
}

impl DeterministicStrategy {
    pub fn new(
        card1: usize,
        card2: usize,
        resp_a: Vec<[u8; 2]>,
        resp_b: Vec<[u8; 2]>,
        resp_c: Vec<[u8; 2]>,
    ) -> Result<Self> {
        if card1 == 0 || card2 == 0 {
            return Err(Error::CardinalityMismatch(
                "cardinalities must be positive".into(),
            ));
        }
        if resp_a.len() != card1 || resp_c.len() != card2 || resp_b.len() != card1 * card2 {
            return Err(Error::CardinalityMismatch(format!(
                "tables have sizes a={}, b={}, c={} for cardinalities ({card1}, {card2})",
                resp_a.len(),
                resp_b.len(),
                resp_c.len()
            )));
        }
        let bits_ok = |t: &[[u8; 2]]| t.iter().flatten().all(|&b| b < 2);
        if !(bits_ok(&resp_a) && bits_ok(&resp_b) && bits_ok(&resp_c)) {
            return Err(Error::InvalidModel("response tables must hold bits".into()));
        }
        Ok(Self {
            card1,
            card2,
            resp_a,
            resp_b,
            resp_c,
        })
    }

    pub fn cards(&self) -> (usize, usize) {
        (self.card1, self.card2)
    }

    pub fn a(&self, xa: usize, l1: usize) -> u8 {
        self.resp_a[l1][xa]
    }

    pub fn b(&self, xb: usize, l1: usize, l2: usize) -> u8 {
        self.resp_b[l1 * self.card2 + l2][xb]
    }

    pub fn c(&self, xc: usize, l2: usize) -> u8 {
        self.resp_c[l2][xc]
    }

    /// Flip `party`'s answer (0 = A, 1 = B, 2 = C) for setting `setting`.
    pub fn relabeled(&self, party: usize, setting: usize) -> Self {
        let mut out = self.clone();
        let table = match party {
            0 => &mut out.resp_a,
            1 => &mut out.resp_b,
            _ => &mut out.resp_c,
        };
        for r in table.iter_mut() {
            r[setting] ^= 1;
        }
        out
    }
}

/// Independent distributions over the two hidden variables.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenVarDistribution {
    p1: Vec<f64>,
    p2: Vec<f64>,
}

fn check_simplex(p: &[f64], name: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution(format!("{name} is empty")));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "{name} has a negative entry"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DIST_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{name} sums to {total}"
        )));
    }
    Ok(())
}

impl HiddenVarDistribution {
    pub fn new(p1: Vec<f64>, p2: Vec<f64>) -> Result<Self> {
        check_simplex(&p1, "p1")?;
        check_simplex(&p2, "p2")?;
        Ok(Self { p1, p2 })
    }

    pub fn uniform(card1: usize, card2: usize) -> Result<Self> {
        Self::new(
            vec![1.0 / card1 as f64; card1],
            vec![1.0 / card2 as f64; card2],
        )
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn p2(&self) -> &[f64] {
        &self.p2
    }
}

/// p(a,b,c|x) = Σ p1(λ1) p2(λ2) [a = A(xA,λ1)] [b = B(xB,λ1,λ2)] [c = C(xC,λ2)]
pub fn bilocal_behavior(
    strat: &DeterministicStrategy,
    dist: &HiddenVarDistribution,
) -> Result<Behavior> {
    if dist.p1.len() != strat.card1 || dist.p2.len() != strat.card2 {
        return Err(Error::CardinalityMismatch(format!(
            "strategy has cardinalities ({}, {}), distribution ({}, {})",
            strat.card1,
            strat.card2,
            dist.p1.len(),
            dist.p2.len()
        )));
    }
    let mut table = [[0.0; 8]; 8];
    for (s, row) in table.iter_mut().enumerate() {
        let (xa, xb, xc) = settings_bits(s);
        for (l1, &q1) in dist.p1.iter().enumerate() {
            for (l2, &q2) in dist.p2.iter().enumerate() {
                let a = strat.a(xa, l1) as usize;
                let b = strat.b(xb, l1, l2) as usize;
                let c = strat.c(xc, l2) as usize;
                row[(a << 2) | (b << 1) | c] += q1 * q2;
            }
        }
    }
    // Row sums are exact up to rounding of Σp1·Σp2; renormalize the residue.
    for row in table.iter_mut() {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    Behavior::new(table)
}

/// Controls for the distribution optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptBudget {
    /// Alternating-maximization sweeps allowed per seed.
    pub max_sweeps: usize,
    /// Seed grid resolution: p2 seeds are all points of the simplex with
    /// coordinates in multiples of `1/grid`.
    pub grid: usize,
}

impl Default for OptBudget {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            grid: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSearch {
    pub max_b: f64,
    pub witness: DeterministicStrategy,
    pub witness_dist: HiddenVarDistribution,
    /// False if some seed used its whole sweep budget without settling.
    pub converged: bool,
    pub tables_examined: u64,
}

/// Bilinear objective √|p1ᵀ W1 p2| + √|p1ᵀ W2 p2|.
struct Bilinear {
    n1: usize,
    n2: usize,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl Bilinear {
    fn value(&self, p1: &[f64], p2: &[f64]) -> f64 {
        let (i1, i2) = self.correlations(p1, p2);
        i1.abs().sqrt() + i2.abs().sqrt()
    }

    fn correlations(&self, p1: &[f64], p2: &[f64]) -> (f64, f64) {
        let mut i1 = 0.0;
        let mut i2 = 0.0;
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let w = p1[i] * p2[j];
                i1 += w * self.w1[i * self.n2 + j];
                i2 += w * self.w2[i * self.n2 + j];
            }
        }
        (i1, i2)
    }

    /// Coefficients of p1 once p2 is fixed (and vice versa).
    fn fold_p2(&self, p2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut l1 = vec![0.0; self.n1];
        let mut l2 = vec![0.0; self.n1];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                l1[i] += self.w1[i * self.n2 + j] * p2[j];
                l2[i] += self.w2[i * self.n2 + j] * p2[j];
            }
        }
        (l1, l2)
    }

    fn fold_p1(&self, p1: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut l1 = vec![0.0; self.n2];
        let mut l2 = vec![0.0; self.n2];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                l1[j] += self.w1[i * self.n2 + j] * p1[i];
                l2[j] += self.w2[i * self.n2 + j] * p1[i];
            }
        }
        (l1, l2)
    }
}

fn root_sum(x: f64, y: f64) -> f64 {
    x.abs().sqrt() + y.abs().sqrt()
}

/// Maximize √|Σ p_i u_i| + √|Σ p_i v_i| over the probability simplex.
///
/// The image of the simplex is the convex hull of the points (u_i, v_i) and
/// the objective grows away from both axes, so the maximum sits on a segment
/// between two of those points. On each piece of a segment where neither
/// coordinate changes sign the objective is concave with a closed-form
/// stationary point.
fn best_response(u: &[f64], v: &[f64]) -> (f64, Vec<f64>) {
    let n = u.len();
    let mut best_val = f64::NEG_INFINITY;
    let mut best = (0usize, 0usize, 1.0f64);
    let mut consider = |val: f64, i: usize, j: usize, t: f64| {
        if val > best_val + 1e-15 {
            best_val = val;
            best = (i, j, t);
        }
    };
    for i in 0..n {
        consider(root_sum(u[i], v[i]), i, i, 1.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // point(t) = t·P_i + (1 − t)·P_j
            let (a, b) = (u[j], u[i] - u[j]);
            let (c, d) = (v[j], v[i] - v[j]);
            let mut cuts = vec![0.0, 1.0];
            for (k, m) in [(a, b), (c, d)] {
                if m != 0.0 {
                    let t = -k / m;
                    if t > 0.0 && t < 1.0 {
                        cuts.push(t);
                    }
                }
            }
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let mid = 0.5 * (lo + hi);
                let s1 = if a + b * mid >= 0.0 { 1.0 } else { -1.0 };
                let s2 = if c + d * mid >= 0.0 { 1.0 } else { -1.0 };
                let (bu, dv) = (s1 * b, s2 * d);
                let (au, cv) = (s1 * a, s2 * c);
                let mut cands = vec![lo, hi];
                if bu * dv < 0.0 {
                    let t = (dv * dv * au - bu * bu * cv) / (bu * dv * (bu - dv));
                    if t > lo && t < hi {
                        cands.push(t);
                    }
                }
                for t in cands {
                    consider(root_sum(a + b * t, c + d * t), i, j, t);
                }
            }
        }
    }
    let mut p = vec![0.0; n];
    let (i, j, t) = best;
    p[i] += t;
    p[j] += 1.0 - t;
    (best_val, p)
}

/// All points of the simplex of dimension `n` with coordinates k/grid.
fn simplex_grid(n: usize, grid: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, grid: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / grid as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, grid, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, grid.max(1), grid.max(1), &mut Vec::new(), &mut out);
    out
}

struct Optimum {
    value: f64,
    p1: Vec<f64>,
    p2: Vec<f64>,
    converged: bool,
}

/// Alternating maximization over (p1, p2) from a grid of p2 seeds.
fn optimize(obj: &Bilinear, budget: &OptBudget) -> Optimum {
    let mut best = Optimum {
        value: f64::NEG_INFINITY,
        p1: vec![],
        p2: vec![],
        converged: true,
    };
    for seed in simplex_grid(obj.n2, budget.grid) {
        let mut p2 = seed;
        let (l1, l2) = obj.fold_p2(&p2);
        let (mut val, mut p1) = best_response(&l1, &l2);
        let mut settled = false;
        for _ in 0..budget.max_sweeps {
            let (l1, l2) = obj.fold_p1(&p1);
            let (_, np2) = best_response(&l1, &l2);
            let (l1, l2) = obj.fold_p2(&np2);
            let (nval, np1) = best_response(&l1, &l2);
            p2 = np2;
            p1 = np1;
            if nval <= val + 1e-14 {
                val = val.max(nval);
                settled = true;
                break;
            }
            val = nval;
        }
        best.converged &= settled;
        if val > best.value + 1e-12 {
            best.value = val;
            best.p1 = p1;
            best.p2 = p2;
        }
    }
    best.value = obj.value(&best.p1, &best.p2);
    best
}

fn response_bits(r: usize) -> [u8; 2] {
    [(r & 1) as u8, ((r >> 1) & 1) as u8]
}

fn sgn(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Non-decreasing sequences over the four single-party response functions.
/// Relabeling hidden values permutes a table, so sorted tables suffice once
/// distributions are optimized.
fn sorted_tables(card: usize) -> Vec<Vec<[u8; 2]>> {
    fn rec(card: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<[u8; 2]>>) {
        if cur.len() == card {
            out.push(cur.iter().map(|&r| response_bits(r)).collect());
            return;
        }
        for r in from..4 {
            cur.push(r);
            rec(card, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(card, 0, &mut Vec::new(), &mut out);
    out
}

fn all_tables(card: usize) -> Vec<Vec<[u8; 2]>> {
    (0..4usize.pow(card as u32))
        .map(|mut idx| {
            (0..card)
                .map(|_| {
                    let r = idx % 4;
                    idx /= 4;
                    response_bits(r)
                })
                .collect()
        })
        .collect()
}

fn check_cards(card1: usize, card2: usize) -> Result<()> {
    if card1 == 0 || card2 == 0 {
        return Err(Error::OutOfRange("cardinalities must be positive".into()));
    }
    if card1 > MAX_EXHAUSTIVE_CARD || card2 > MAX_EXHAUSTIVE_CARD {
        return Err(Error::OutOfRange(format!(
            "exhaustive search supports cardinalities up to {MAX_EXHAUSTIVE_CARD}"
        )));
    }
    Ok(())
}

/// Largest bilocality value B (peripheral-sum convention) reachable by
/// bilocal models with the given hidden-variable cardinalities.
///
/// Every pair of peripheral response tables is enumerated. For fixed
/// peripheral tables and distributions, I1 depends only on the central
/// answers to xB = 0 and I2 only on those to xB = 1, and B grows with |I1|
/// and |I2|; each central answer is therefore set to the sign that makes its
/// term add up, which is exact rather than heuristic. The remaining bilinear
/// problem over (p1, p2) goes to alternating maximization.
pub fn max_biloc_bilocal(card1: usize, card2: usize, budget: OptBudget) -> Result<BoundSearch> {
    check_cards(card1, card2)?;
    let a_tables = sorted_tables(card1);
    let c_tables = sorted_tables(card2);
    let mut best: Option<(f64, usize, usize, Optimum)> = None;
    let mut converged = true;
    let mut examined = 0u64;
    for (ia, ta) in a_tables.iter().enumerate() {
        // α0 = Σ_x (−1)^a(x), α1 = Σ_x (−1)^{x + a(x)}
        let alpha: Vec<(f64, f64)> = ta
            .iter()
            .map(|r| (sgn(r[0]) + sgn(r[1]), sgn(r[0]) - sgn(r[1])))
            .collect();
        for (ic, tc) in c_tables.iter().enumerate() {
            examined += 1;
            let gamma: Vec<(f64, f64)> = tc
                .iter()
                .map(|r| (sgn(r[0]) + sgn(r[1]), sgn(r[0]) - sgn(r[1])))
                .collect();
            let mut w1 = Vec::with_capacity(card1 * card2);
            let mut w2 = Vec::with_capacity(card1 * card2);
            for al in &alpha {
                for ga in &gamma {
                    w1.push((al.0 * ga.0).abs() / 4.0);
                    w2.push((al.1 * ga.1).abs() / 4.0);
                }
            }
            let obj = Bilinear {
                n1: card1,
                n2: card2,
                w1,
                w2,
            };
            let opt = optimize(&obj, &budget);
            converged &= opt.converged;
            if best.as_ref().is_none_or(|b| opt.value > b.0 + 1e-12) {
                best = Some((opt.value, ia, ic, opt));
            }
        }
    }
    let (_, ia, ic, opt) = best.expect("at least one table pair");
    let (ta, tc) = (&a_tables[ia], &c_tables[ic]);
    let mut resp_b = Vec::with_capacity(card1 * card2);
    for ra in ta {
        for rc in tc {
            let al = (sgn(ra[0]) + sgn(ra[1]), sgn(ra[0]) - sgn(ra[1]));
            let ga = (sgn(rc[0]) + sgn(rc[1]), sgn(rc[0]) - sgn(rc[1]));
            resp_b.push([(al.0 * ga.0 < 0.0) as u8, (al.1 * ga.1 < 0.0) as u8]);
        }
    }
    let witness = DeterministicStrategy::new(card1, card2, ta.clone(), resp_b, tc.clone())?;
    let witness_dist = HiddenVarDistribution::new(normalize(opt.p1), normalize(opt.p2))?;
    // Report the witness's own value so the number is reproducible from it.
    let max_b = biloc_functional(
        &bilocal_behavior(&witness, &witness_dist)?,
        Convention::Peripheral,
    )
    .b;
    Ok(BoundSearch {
        max_b,
        witness,
        witness_dist,
        converged,
        tables_examined: examined,
    })
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let t: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= t);
    p
}

/// Correlator weights of one explicit deterministic strategy.
fn strategy_weights(s: &DeterministicStrategy, convention: Convention) -> Bilinear {
    let (n1, n2) = s.cards();
    let mut w1 = vec![0.0; n1 * n2];
    let mut w2 = vec![0.0; n1 * n2];
    for l1 in 0..n1 {
        for l2 in 0..n2 {
            let corr = |xa: usize, xb: usize, xc: usize| {
                sgn(s.a(xa, l1)) * sgn(s.b(xb, l1, l2)) * sgn(s.c(xc, l2))
            };
            let (mut i1, mut i2) = (0.0, 0.0);
            for u in 0..2 {
                for v in 0..2 {
                    let sg = if (u + v) % 2 == 0 { 1.0 } else { -1.0 };
                    match convention {
                        Convention::Peripheral => {
                            i1 += corr(u, 0, v);
                            i2 += sg * corr(u, 1, v);
                        }
                        Convention::Literal => {
                            i1 += corr(u, v, 0);
                            i2 += sg * corr(u, v, 1);
                        }
                    }
                }
            }
            w1[l1 * n2 + l2] = i1 / 4.0;
            w2[l1 * n2 + l2] = i2 / 4.0;
        }
    }
    Bilinear { n1, n2, w1, w2 }
}

/// Brute force over every response table of all three parties, central node
/// included, with distribution optimization for each one. Only feasible for
/// small cardinalities (central tables number 4^(card1·card2)).
pub fn max_biloc_exhaustive(
    card1: usize,
    card2: usize,
    convention: Convention,
    budget: OptBudget,
) -> Result<BoundSearch> {
    check_cards(card1, card2)?;
    if card1 * card2 > 4 {
        return Err(Error::OutOfRange(
            "full central-table enumeration needs card1·card2 ≤ 4".into(),
        ));
    }
    let a_tables = all_tables(card1);
    let c_tables = all_tables(card2);
    let b_tables = all_tables(card1 * card2);
    let mut best: Option<(f64, DeterministicStrategy, Optimum)> = None;
    let mut converged = true;
    let mut examined = 0u64;
    for ta in &a_tables {
        for tb in &b_tables {
            for tc in &c_tables {
                examined += 1;
                let s =
                    DeterministicStrategy::new(card1, card2, ta.clone(), tb.clone(), tc.clone())?;
                let opt = optimize(&strategy_weights(&s, convention), &budget);
                converged &= opt.converged;
                if best.as_ref().is_none_or(|b| opt.value > b.0 + 1e-12) {
                    best = Some((opt.value, s, opt));
                }
            }
        }
    }
    let (_, witness, opt) = best.expect("non-empty enumeration");
    let witness_dist = HiddenVarDistribution::new(normalize(opt.p1), normalize(opt.p2))?;
    let max_b = biloc_functional(&bilocal_behavior(&witness, &witness_dist)?, convention).b;
    Ok(BoundSearch {
        max_b,
        witness,
        witness_dist,
        converged,
        tables_examined: examined,
    })
}

/// A bilocal model that reaches B = √2 when I1, I2 are summed over (xA, xB)
/// with C's input fixed: the central node sees λ1, so A and B alone can
/// saturate both sums.
pub fn literal_convention_witness() -> (DeterministicStrategy, HiddenVarDistribution) {
    // λ1 = 0: A answers 0 for both settings; λ1 = 1: A answers its setting.
    // B copies the matching pattern; C always answers 0.
    let strat = DeterministicStrategy::new(
        2,
        1,
        vec![[0, 0], [0, 1]],
        vec![[0, 0], [0, 1]],
        vec![[0, 0]],
    )
    .expect("valid tables");
    let dist = HiddenVarDistribution::new(vec![0.5, 0.5], vec![1.0]).expect("valid distribution");
    (strat, dist)
}

/// Tripartite local model: one shared λ, no independence constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalStrategy {
    pub resp_a: Vec<[u8; 2]>,
    pub resp_b: Vec<[u8; 2]>,
    pub resp_c: Vec<[u8; 2]>,
}

pub fn local_behavior(strat: &LocalStrategy, p: &[f64]) -> Result<Behavior> {
    let n = p.len();
    if strat.resp_a.len() != n || strat.resp_b.len() != n || strat.resp_c.len() != n {
        return Err(Error::CardinalityMismatch(
            "local tables vs distribution".into(),
        ));
    }
    check_simplex(p, "p")?;
    let mut table = [[0.0; 8]; 8];
    for (s, row) in table.iter_mut().enumerate() {
        let (xa, xb, xc) = settings_bits(s);
        for (l, &q) in p.iter().enumerate() {
            let o = ((strat.resp_a[l][xa] as usize) << 2)
                | ((strat.resp_b[l][xb] as usize) << 1)
                | strat.resp_c[l][xc] as usize;
            row[o] += q;
        }
    }
    for row in table.iter_mut() {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= total);
    }
    Behavior::new(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalBound {
    pub max_abs_sum: f64,
    pub witness: LocalStrategy,
    /// Distinct (I1, I2) images of the deterministic local strategies.
    pub vertices: Vec<(f64, f64)>,
}

/// Largest |I1| + |I2| over tripartite-local models with up to `card`
/// hidden values.
///
/// The local set is the convex hull of the 64 deterministic behaviors and
/// |I1| + |I2| is convex, so its maximum over mixtures of any size sits on
/// one of those vertices.
pub fn max_i1_plus_i2_local(card: usize) -> Result<LocalBound> {
    if card == 0 || card > 16 {
        return Err(Error::OutOfRange(format!("card {card} not in 1..=16")));
    }
    let mut best: Option<(f64, LocalStrategy)> = None;
    let mut vertices: Vec<(f64, f64)> = Vec::new();
    for idx in 0..64usize {
        let strat = LocalStrategy {
            resp_a: vec![response_bits(idx & 3)],
            resp_b: vec![response_bits((idx >> 2) & 3)],
            resp_c: vec![response_bits((idx >> 4) & 3)],
        };
        let r = biloc_functional(&local_behavior(&strat, &[1.0])?, Convention::Peripheral);
        if !vertices
            .iter()
            .any(|&(x, y)| (x - r.i1).abs() < 1e-12 && (y - r.i2).abs() < 1e-12)
        {
            vertices.push((r.i1, r.i2));
        }
        let v = r.i1.abs() + r.i2.abs();
        if best.as_ref().is_none_or(|b| v > b.0 + 1e-12) {
            best = Some((v, strat));
        }
    }
    let (max_abs_sum, witness) = best.expect("64 strategies");
    vertices.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(LocalBound {
        max_abs_sum,
        witness,
        vertices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPoint {
    pub i1: f64,
    pub i2: f64,
    pub bilocal: bool,
    pub local: bool,
}

/// √|I1| + √|I2| ≤ 1 (necessary for a bilocal model)
pub fn is_bilocal_compatible(i1: f64, i2: f64) -> bool {
    FunctionalResult::from_correlations(i1, i2).b <= 1.0 + BOUND_TOL
}

/// |I1| + |I2| ≤ 1
pub fn is_local_compatible(i1: f64, i2: f64) -> bool {
    i1.abs() + i2.abs() <= 1.0 + BOUND_TOL
}

pub fn classify(i1: f64, i2: f64) -> RegionPoint {
    RegionPoint {
        i1,
        i2,
        bilocal: is_bilocal_compatible(i1, i2),
        local: is_local_compatible(i1, i2),
    }
}

/// `resolution × resolution` grid over [−1, 1]², row-major in I1.
pub fn region_scan(resolution: usize) -> Result<Vec<RegionPoint>> {
    if resolution < 2 {
        return Err(Error::OutOfRange("region resolution must be ≥ 2".into()));
    }
    let step = 2.0 / (resolution - 1) as f64;
    let coord = |k: usize| {
        let x = -1.0 + k as f64 * step;
        // snap rounding noise so the centre lands on exact zero
        if x.abs() < 1e-12 {
            0.0
        } else {
            x
        }
    };
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            out.push(classify(coord(i), coord(j)));
        }
    }
    Ok(out)
}
