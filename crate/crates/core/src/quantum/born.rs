use num_complex::Complex64;

use super::behavior::{settings_bits, ArmBehavior, Behavior, BipartiteBehavior};
use super::observable::{DichotomicObservable, MeasurementPlan};
use super::state::TwoQubitState;

/// p(x, y) = tr[(Π_x ⊗ Π_y) ρ] for one source, indexed `x << 1 | y`.
pub fn pair_distribution(
    rho: &TwoQubitState,
    first: &DichotomicObservable,
    second: &DichotomicObservable,
) -> [f64; 4] {
    let mut out = [0.0; 4];
    for x in 0..2 {
        let px = first.projector(x);
        for y in 0..2 {
            let proj = px.kronecker(&second.projector(y));
            let p: Complex64 = (proj * rho.matrix()).trace();
            out[(x << 1) | y] = p.re.clamp(0.0, 1.0);
        }
    }
    out
}

/// Born-rule statistics of the four stations with both central-arm bits kept.
///
/// Qubit order is (A side of ρ1, B side of ρ1, B side of ρ2, C side of ρ2);
/// the product-state trace factorizes into one pair distribution per source.
pub fn born_arm_behavior(
    rho1: &TwoQubitState,
    rho2: &TwoQubitState,
    plan: &MeasurementPlan,
) -> ArmBehavior {
    let mut table = [[0.0; 16]; 8];
    for (s, row) in table.iter_mut().enumerate() {
        let (xa, xb, xc) = settings_bits(s);
        let p1 = pair_distribution(rho1, &plan.a[xa], &plan.b_arm_a[xb]);
        let p2 = pair_distribution(rho2, &plan.b_arm_c[xb], &plan.c[xc]);
        for (o, cell) in row.iter_mut().enumerate() {
            let (a, ba, bc, c) = ArmBehavior::outcome_bits(o);
            *cell = p1[(a << 1) | ba] * p2[(bc << 1) | c];
        }
    }
    ArmBehavior::new(table).expect("product of normalized pair distributions")
}

/// p(a, b, c | xA, xB, xC) with b the parity of the two central-arm outcomes.
pub fn born_behavior(
    rho1: &TwoQubitState,
    rho2: &TwoQubitState,
    plan: &MeasurementPlan,
) -> Behavior {
    born_arm_behavior(rho1, rho2, plan).parity_marginal()
}

/// Two-party statistics of one source measured with the given setting pairs.
pub fn born_bipartite(
    rho: &TwoQubitState,
    first: &[DichotomicObservable; 2],
    second: &[DichotomicObservable; 2],
) -> BipartiteBehavior {
    let mut table = [[0.0; 4]; 4];
    for x in 0..2 {
        for y in 0..2 {
            table[(x << 1) | y] = pair_distribution(rho, &first[x], &second[y]);
        }
    }
    BipartiteBehavior::new(table).expect("normalized pair distribution")
}
