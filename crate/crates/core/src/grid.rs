//! Uniform grids over boxes and near-minimizer clusters.

use rayon::prelude::*;

use crate::sampling::Interval;

/// Points per axis used by the grid oracle, by dimension.
pub fn default_points_per_axis(dim: usize) -> usize {
    match dim {
        0 | 1 => 4001,
        2 => 201,
        _ => 61,
    }
}

/// Largest dimension the exhaustive grid is attempted in.
pub const MAX_GRID_DIM: usize = 3;

/// Grid point `index` in row-major order (first coordinate varies slowest).
/// Axis values are `lo + (hi - lo)·i/(N-1)`, with the endpoints exact.
pub fn grid_point(bounds: &[Interval], per_axis: usize, mut index: usize) -> Vec<f64> {
    let last = (per_axis.max(2) - 1) as f64;
    let mut point = vec![0.0; bounds.len()];
    for (k, b) in bounds.iter().enumerate().rev() {
        let i = index % per_axis;
        index /= per_axis;
        point[k] = if i + 1 == per_axis {
            b.hi
        } else {
            b.lo + b.width() * (i as f64) / last
        };
    }
    point
}

pub fn grid_len(dim: usize, per_axis: usize) -> usize {
    per_axis.pow(dim as u32)
}

/// Evaluate `f` on every grid point, in index order.
pub fn scan<T, F>(bounds: &[Interval], per_axis: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    (0..grid_len(bounds.len(), per_axis))
        .into_par_iter()
        .map(|i| f(&grid_point(bounds, per_axis, i)))
        .collect()
}

/// Largest pairwise Euclidean distance; above 4096 points the bounding-box
/// diagonal is used instead (an upper bound).
pub fn diameter(points: &[Vec<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    if points.len() > 4096 {
        let n = points[0].len();
        return (0..n)
            .map(|k| {
                let (lo, hi) = points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        (lo.min(p[k]), hi.max(p[k]))
                    });
                (hi - lo).powi(2)
            })
            .sum::<f64>()
            .sqrt();
    }
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            points[i + 1..]
                .iter()
                .map(|q| distance(&points[i], q))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Diameter of `{i : values[i] <= min + t}` for `t = tol, tol/10, ..., tol·1e-6, 0`,
/// as `(t, diameter)`. NaN values never qualify.
pub fn cluster_ladder(
    bounds: &[Interval],
    per_axis: usize,
    values: &[f64],
    min: f64,
    tol: f64,
) -> Vec<(f64, f64)> {
    (0..=7)
        .map(|k| if k == 7 { 0.0 } else { tol * 10f64.powi(-k) })
        .map(|t| {
            let pts: Vec<Vec<f64>> = values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v <= min + t)
                .map(|(i, _)| grid_point(bounds, per_axis, i))
                .collect();
            (t, diameter(&pts))
        })
        .collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_order() {
        let b = [Interval::new(-10.0, 10.0)];
        assert_eq!(grid_point(&b, 4001, 0), vec![-10.0]);
        assert_eq!(grid_point(&b, 4001, 2200), vec![1.0]);
        assert_eq!(grid_point(&b, 4001, 4000), vec![10.0]);
        let b2 = [Interval::new(0.0, 1.0), Interval::new(0.0, 2.0)];
        assert_eq!(grid_point(&b2, 3, 1), vec![0.0, 1.0]);
        assert_eq!(grid_point(&b2, 3, 3), vec![0.5, 0.0]);
        assert_eq!(scan(&b2, 3, |p| p[0] + p[1]).len(), 9);
    }

    #[test]
    fn diameters() {
        assert_eq!(diameter(&[vec![1.0]]), 0.0);
        assert_eq!(diameter(&[vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 1.0]]), 5.0);
        let many: Vec<Vec<f64>> = (0..5000).map(|i| vec![i as f64, 0.0]).collect();
        assert_eq!(diameter(&many), 4999.0);
    }

    #[test]
    fn ladder_tightens_flat_minimum() {
        let b = [Interval::new(0.0, 2.0)];
        let values = scan(&b, 4001, |z| z[0].powi(5));
        let ladder = cluster_ladder(&b, 4001, &values, 0.0, 1e-6);
        assert!(ladder[0].1 > 0.05);
        assert_eq!(ladder.last().unwrap(), &(0.0, 0.0));
    }
}
