use super::Counterexample;
use crate::sampling::Interval;

/// A shrink step is kept only while the witness stays at least this fraction
/// of the original excess past the refutation threshold. Without the floor the
/// search drifts onto the boundary where the witness is decided by roundoff.
const KEEP_FRACTION: f64 = 0.5;
const MAX_PASSES: usize = 8;
const HALVINGS: i32 = 12;

/// Move δ down the grid and the points toward the sampling-box center (and onto
/// integers) while `eval` still reports a violation.
///
/// `eval(z1, z2, δ)` returns `Some` only for applicable, violating samples.
pub(crate) fn shrink<F>(
    original: &Counterexample,
    grid: &[f64],
    sampling_box: &[Interval],
    eval: F,
) -> Counterexample
where
    F: Fn(&[f64], &[f64], f64) -> Option<Counterexample>,
{
    let floor = KEEP_FRACTION * original.relation.excess(original.violation).max(0.0);
    let attempt = |z1: &[f64], z2: &[f64], delta: f64| {
        eval(z1, z2, delta).filter(|cx| cx.relation.excess(cx.violation) >= floor)
    };
    let in_box = |x: f64, b: &Interval| x >= b.lo && x <= b.hi;

    let shrink_delta = |cur: Counterexample| -> Counterexample {
        grid.iter()
            .filter(|&&d| d < cur.delta)
            .find_map(|&d| attempt(&cur.z1, &cur.z2, d))
            .unwrap_or(cur)
    };

    let mut cur = shrink_delta(original.clone());
    let n = cur.z1.len();
    for _ in 0..MAX_PASSES {
        let mut changed = false;
        for block in 0..2 {
            for i in 0..n {
                let b = &sampling_box[i];
                let x = if block == 0 { cur.z1[i] } else { cur.z2[i] };
                let c = b.center();
                let mut candidates: Vec<f64> = if x == c {
                    Vec::new()
                } else {
                    (0..HALVINGS).map(|k| x + 0.5f64.powi(k) * (c - x)).collect()
                };
                candidates.push(x.round());
                for cand in candidates {
                    if cand == x || !in_box(cand, b) {
                        continue;
                    }
                    let (mut z1, mut z2) = (cur.z1.clone(), cur.z2.clone());
                    if block == 0 {
                        z1[i] = cand;
                    } else {
                        z2[i] = cand;
                    }
                    if let Some(next) = attempt(&z1, &z2, cur.delta) {
                        cur = next;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    shrink_delta(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invexity::Relation;

    fn cx(z1: f64, z2: f64, delta: f64, violation: f64) -> Counterexample {
        Counterexample {
            z1: vec![z1],
            z2: vec![z2],
            delta,
            generated_point: vec![0.0],
            lhs: violation,
            rhs: 0.0,
            violation,
            relation: Relation::Le(0.0),
        }
    }

    #[test]
    fn constant_violation_shrinks_to_center_and_zero_delta() {
        let grid = [0.0, 0.5, 1.0];
        let sbox = [Interval::new(-10.0, 10.0)];
        let out = shrink(&cx(7.3, -4.1, 1.0, 6.0), &grid, &sbox, |a, b, d| {
            Some(cx(a[0], b[0], d, 6.0))
        });
        assert_eq!((out.z1[0], out.z2[0], out.delta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn floor_keeps_violation_material() {
        // Violation z1 - z2 needs z1 > z2; the floor stops it from collapsing.
        let grid = [1.0];
        let sbox = [Interval::new(0.0, 10.0)];
        let out = shrink(&cx(10.0, 0.0, 1.0, 10.0), &grid, &sbox, |a, b, d| {
            let v = a[0] - b[0];
            (v > 0.0).then(|| cx(a[0], b[0], d, v))
        });
        assert!(out.violation >= 5.0);
        assert!(out.z1[0] <= 10.0 && out.z2[0] >= 0.0);
    }
}
