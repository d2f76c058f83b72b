//! Mobility graph: averaged flows, top-fraction binary adjacency, full-rank
//! correction, symmetric normalization and a two-layer GCN forward pass.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use nalgebra::DMatrix;

use crate::ingest::{FlowRecord, Region};
use crate::{Error, Result};

/// Relative residual norm at or below which a row is in the span of earlier rows.
const DEPENDENCE_TOL: f64 = 1e-10;
/// Completion vectors whose residual falls below this are skipped.
const COMPLETION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub regions: Vec<Region>,
    /// `mean_flow[(i, j)]`: average population flow from region `i` to `j`.
    pub mean_flow: DMatrix<f64>,
}

/// Averages `pop_flows` per (origin, destination) over the distinct dates in
/// `records`; absent triples count as zero and unknown regions are skipped.
pub fn aggregate_flows(records: &[FlowRecord], regions: &[Region]) -> FlowMatrix {
    let n = regions.len();
    let index: HashMap<&Region, usize> = regions.iter().enumerate().map(|(i, r)| (r, i)).collect();
    let mut sum = DMatrix::zeros(n, n);
    let mut dates = BTreeSet::new();
    for r in records {
        if let (Some(&i), Some(&j)) = (index.get(&r.origin), index.get(&r.destination)) {
            sum[(i, j)] += r.pop_flows;
            dates.insert(r.date);
        }
    }
    if !dates.is_empty() {
        sum /= dates.len() as f64;
    }
    FlowMatrix {
        regions: regions.to_vec(),
        mean_flow: sum,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryAdjacency {
    pub regions: Vec<Region>,
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

/// Number of cells set by [`binarize_top_fraction`]: `⌈fraction · cells⌉`.
pub fn top_cell_count(fraction: f64, cells: usize) -> usize {
    // The small slack keeps products such as 0.2 * 25 from rounding up past 5.
    ((fraction * cells as f64 - 1e-9).ceil().max(0.0) as usize).min(cells)
}

/// Marks the `⌈fraction·N²⌉` largest cells with 1; ties go to the smaller
/// (origin, destination) pair. With `exclude_self_loops` the diagonal stays
/// 0 and the count is taken over the `N(N-1)` off-diagonal cells.
pub fn binarize_top_fraction(flows: &FlowMatrix, fraction: f64, exclude_self_loops: bool) -> Result<BinaryAdjacency> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Parameter(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let n = flows.mean_flow.nrows();
    let mut cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| !(exclude_self_loops && i == j))
        .collect();
    let keep = top_cell_count(fraction, cells.len());
    let m = &flows.mean_flow;
    cells.sort_by(|a, b| m[*b].total_cmp(&m[*a]).then(a.cmp(b)));
    let mut matrix = DMatrix::zeros(n, n);
    for &c in &cells[..keep] {
        matrix[c] = 1.0;
    }
    let rank = crate::linalg::numerical_rank(&matrix, 1e-10);
    Ok(BinaryAdjacency {
        regions: flows.regions.clone(),
        matrix,
        rank,
    })
}

/// Modified Gram-Schmidt over the rows in order. A row already in the span of
/// the previous ones is replaced by the next standard basis vector (in index
/// order) that is not. The result has orthonormal rows.
pub fn full_rank_correct(adj: &BinaryAdjacency) -> Result<BinaryAdjacency> {
    let m = &adj.matrix;
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "adjacency must be square, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let orthogonalize = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for q in basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        v.iter().map(|a| a * a).sum::<f64>().sqrt()
    };
    let mut next_unit = 0;
    for i in 0..n {
        let mut v: Vec<f64> = m.row(i).iter().copied().collect();
        let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut norm = orthogonalize(&mut v, &basis);
        if norm <= DEPENDENCE_TOL * norm0.max(1.0) {
            loop {
                if next_unit >= n {
                    return Err(Error::Domain("ran out of completion vectors".into()));
                }
                v = vec![0.0; n];
                v[next_unit] = 1.0;
                next_unit += 1;
                norm = orthogonalize(&mut v, &basis);
                if norm > COMPLETION_TOL {
                    break;
                }
            }
        }
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| basis[i][j]);
    let rank = crate::linalg::numerical_rank(&matrix, 1e-8);
    Ok(BinaryAdjacency {
        regions: adj.regions.clone(),
        matrix,
        rank,
    })
}

/// `Â = D^{-1/2} (S + I) D^{-1/2}` with `S = (A + Aᵀ)/2` and `D` the row sums
/// of `|S + I|`; absolute values keep degrees positive after correction.
pub fn normalize_adjacency(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "adjacency must be square, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut s = (a + a.transpose()) * 0.5;
    for i in 0..n {
        s[(i, i)] += 1.0;
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = s.row(i).iter().map(|v| v.abs()).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * s[(i, j)] * inv_sqrt[j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnWeights {
    pub w0: DMatrix<f64>,
    pub w1: DMatrix<f64>,
}

impl GcnWeights {
    pub fn new(w0: DMatrix<f64>, w1: DMatrix<f64>) -> Result<Self> {
        if w0.ncols() != w1.nrows() {
            return Err(Error::Dimension(format!(
                "W0 has {} columns but W1 has {} rows",
                w0.ncols(),
                w1.nrows()
            )));
        }
        if w0.iter().chain(w1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("GCN weights must be finite".into()));
        }
        Ok(GcnWeights { w0, w1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Sigmoid,
}

/// `σ(Â · ReLU(Â X W0) · W1)`.
pub fn gcn_forward(
    x: &DMatrix<f64>,
    a_hat: &DMatrix<f64>,
    w: &GcnWeights,
    activation: Activation,
) -> Result<DMatrix<f64>> {
    let n = a_hat.nrows();
    if a_hat.ncols() != n || x.nrows() != n {
        return Err(Error::Dimension(format!(
            "features have {} rows, adjacency is {}x{}",
            x.nrows(),
            n,
            a_hat.ncols()
        )));
    }
    if x.ncols() != w.w0.nrows() || w.w0.ncols() != w.w1.nrows() {
        return Err(Error::Dimension("feature and weight dimensions do not chain".into()));
    }
    let hidden = (a_hat * x * &w.w0).map(|v| v.max(0.0));
    let out = a_hat * hidden * &w.w1;
    Ok(match activation {
        Activation::Identity => out,
        Activation::Sigmoid => out.map(|v| 1.0 / (1.0 + (-v).exp())),
    })
}

/// The whole pipeline from flow records to the normalized adjacency.
#[derive(Debug, Clone)]
pub struct MobilityGraph {
    pub flows: FlowMatrix,
    pub binary: BinaryAdjacency,
    pub corrected: BinaryAdjacency,
    pub normalized: DMatrix<f64>,
}

pub fn build_mobility_graph(
    records: &[FlowRecord],
    regions: &[Region],
    fraction: f64,
    exclude_self_loops: bool,
) -> Result<MobilityGraph> {
    let flows = aggregate_flows(records, regions);
    let binary = binarize_top_fraction(&flows, fraction, exclude_self_loops)?;
    let corrected = full_rank_correct(&binary)?;
    let normalized = normalize_adjacency(&corrected.matrix)?;
    Ok(MobilityGraph {
        flows,
        binary,
        corrected,
        normalized,
    })
}

/// CSV with a header of region codes followed by one row per region.
pub fn adjacency_csv(regions: &[Region], m: &DMatrix<f64>) -> Result<String> {
    if m.nrows() != regions.len() || m.ncols() != regions.len() {
        return Err(Error::Dimension("matrix does not match the region list".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(regions.iter().map(|r| r.as_str()))?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<adjacency>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_adjacency_csv(path: impl AsRef<Path>, regions: &[Region], m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, adjacency_csv(regions, m)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn regions(codes: &[&str]) -> Vec<Region> {
        codes.iter().map(|c| Region::parse(c).unwrap()).collect()
    }

    fn flow(o: &str, d: &str, day: u32, v: f64) -> FlowRecord {
        FlowRecord {
            origin: Region::parse(o).unwrap(),
            destination: Region::parse(d).unwrap(),
            date: NaiveDate::from_ymd_opt(2020, 3, day).unwrap(),
            visitor_flows: v,
            pop_flows: v,
        }
    }

    fn flows_of(m: DMatrix<f64>) -> FlowMatrix {
        let all = Region::all_states();
        FlowMatrix {
            regions: all[..m.nrows()].to_vec(),
            mean_flow: m,
        }
    }

    #[test]
    fn aggregation_examples() {
        let r = regions(&["CA", "NY"]);
        let f = aggregate_flows(&[flow("CA", "NY", 1, 10.0)], &r);
        assert_eq!(f.mean_flow, DMatrix::from_row_slice(2, 2, &[0.0, 10.0, 0.0, 0.0]));
        let f = aggregate_flows(&[flow("CA", "NY", 1, 10.0), flow("CA", "NY", 2, 20.0)], &r);
        assert_eq!(f.mean_flow[(0, 1)], 15.0);
        // A pair missing on one of two dates counts as zero that day.
        let f = aggregate_flows(&[flow("CA", "NY", 1, 10.0), flow("NY", "CA", 2, 4.0)], &r);
        assert_eq!(f.mean_flow[(0, 1)], 5.0);
        assert_eq!(f.mean_flow[(1, 0)], 2.0);
        assert_eq!(aggregate_flows(&[], &r).mean_flow, DMatrix::zeros(2, 2));
        let f = aggregate_flows(&[flow("TX", "NY", 1, 3.0)], &r);
        assert_eq!(f.mean_flow, DMatrix::zeros(2, 2));
    }

    #[test]
    fn binarize_examples() {
        let f = flows_of(DMatrix::from_row_slice(
            3,
            3,
            &[10.0, 2.0, 1.0, 3.0, 8.0, 1.0, 1.0, 1.0, 9.0],
        ));
        let b = binarize_top_fraction(&f, 0.2, false).unwrap();
        let mut want = DMatrix::zeros(3, 3);
        want[(0, 0)] = 1.0;
        want[(2, 2)] = 1.0;
        assert_eq!(b.matrix, want);
        assert_eq!(b.rank, 2);

        let ones = binarize_top_fraction(&f, 1.0, false).unwrap();
        assert_eq!(ones.matrix, DMatrix::from_element(3, 3, 1.0));

        let flat = flows_of(DMatrix::from_element(5, 5, 7.0));
        let b = binarize_top_fraction(&flat, 0.2, false).unwrap();
        assert_eq!(b.matrix.sum(), 5.0);
        assert!((0..5).all(|j| b.matrix[(0, j)] == 1.0));

        let b = binarize_top_fraction(&f, 0.5, true).unwrap();
        assert_eq!(b.matrix.sum(), 3.0);
        assert!((0..3).all(|i| b.matrix[(i, i)] == 0.0));
        assert!(binarize_top_fraction(&f, 0.0, false).is_err());
    }

    #[test]
    fn cell_count_avoids_float_overshoot() {
        assert_eq!(top_cell_count(0.2, 25), 5);
        assert_eq!(top_cell_count(0.2, 9), 2);
        assert_eq!(top_cell_count(0.2, 51 * 51), 521);
    }

    fn adj(m: DMatrix<f64>) -> BinaryAdjacency {
        let rank = crate::linalg::numerical_rank(&m, 1e-10);
        BinaryAdjacency {
            regions: Region::all_states()[..m.nrows()].to_vec(),
            matrix: m,
            rank,
        }
    }

    #[test]
    fn correction_examples() {
        let c = full_rank_correct(&adj(DMatrix::zeros(2, 2))).unwrap();
        assert_eq!(c.matrix, DMatrix::identity(2, 2));
        assert_eq!(c.rank, 2);

        let id = full_rank_correct(&adj(DMatrix::identity(4, 4))).unwrap();
        assert_eq!(id.matrix, DMatrix::identity(4, 4));

        let dup = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let c = full_rank_correct(&adj(dup)).unwrap();
        assert_eq!(c.rank, 3);
        let s = 0.5f64.sqrt();
        // First row normalized, second replaced by e0 orthogonalized, third kept.
        assert!(
            (c.matrix.row(0) - DMatrix::from_row_slice(1, 3, &[s, s, 0.0]))
                .abs()
                .max()
                < 1e-15
        );
        assert!(
            (c.matrix.row(1) - DMatrix::from_row_slice(1, 3, &[s, -s, 0.0]))
                .abs()
                .max()
                < 1e-15
        );
        assert!(
            (c.matrix.row(2) - DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]))
                .abs()
                .max()
                < 1e-15
        );
    }

    #[test]
    fn correction_spans_original_rows() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0]);
        let c = full_rank_correct(&adj(m.clone())).unwrap();
        // Orthonormal rows: original rows are reproduced by projection.
        let proj = &m * c.matrix.transpose() * &c.matrix;
        assert!((proj - m).abs().max() < 1e-12);
    }

    #[test]
    fn random_binaries_become_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let m = DMatrix::from_fn(8, 8, |_, _| if rng.gen_bool(0.2) { 1.0 } else { 0.0 });
            let c = full_rank_correct(&adj(m)).unwrap();
            let sv = c.matrix.clone().svd(false, false).singular_values;
            assert!(sv.min() > 1e-8);
            assert_eq!(c.rank, 8);
        }
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(
            normalize_adjacency(&DMatrix::zeros(1, 1)).unwrap(),
            DMatrix::from_element(1, 1, 1.0)
        );
        assert_eq!(
            normalize_adjacency(&DMatrix::zeros(2, 2)).unwrap(),
            DMatrix::identity(2, 2)
        );
        let k2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let a = normalize_adjacency(&k2).unwrap();
        assert!((a - DMatrix::from_element(2, 2, 0.5)).abs().max() < 1e-15);
    }

    fn spectral_radius(m: &DMatrix<f64>) -> f64 {
        // Symmetric input: the largest singular value is the spectral radius.
        m.clone().svd(false, false).singular_values.max()
    }

    #[test]
    fn normalized_spectral_radius_at_most_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let m = DMatrix::from_fn(6, 6, |_, _| if rng.gen_bool(0.3) { 1.0 } else { 0.0 });
            let b = normalize_adjacency(&m).unwrap();
            assert!(spectral_radius(&b) <= 1.0 + 1e-12);
            let c = full_rank_correct(&adj(m)).unwrap();
            assert!(spectral_radius(&normalize_adjacency(&c.matrix).unwrap()) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn gcn_examples() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let w = GcnWeights::new(one.clone(), one.clone()).unwrap();
        let out = gcn_forward(&DMatrix::from_element(1, 1, 2.0), &one, &w, Activation::Identity).unwrap();
        assert_eq!(out, DMatrix::from_element(1, 1, 2.0));

        let w = GcnWeights::new(DMatrix::identity(1, 1), DMatrix::identity(1, 1)).unwrap();
        let x = DMatrix::from_column_slice(2, 1, &[-3.0, 4.0]);
        let out = gcn_forward(&x, &DMatrix::identity(2, 2), &w, Activation::Identity).unwrap();
        assert_eq!(out, DMatrix::from_column_slice(2, 1, &[0.0, 4.0]));
        let s = gcn_forward(&x, &DMatrix::identity(2, 2), &w, Activation::Sigmoid).unwrap();
        assert!((s[(0, 0)] - 0.5).abs() < 1e-15);

        assert!(GcnWeights::new(DMatrix::zeros(2, 3), DMatrix::zeros(2, 1)).is_err());
        let w = GcnWeights::new(DMatrix::zeros(2, 3), DMatrix::zeros(3, 1)).unwrap();
        assert!(matches!(
            gcn_forward(&x, &DMatrix::identity(2, 2), &w, Activation::Identity),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn gcn_permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut r = || rng.gen_range(-1.0f64..1.0);
        let x = DMatrix::from_fn(4, 3, |_, _| r());
        let a = normalize_adjacency(&DMatrix::from_fn(4, 4, |_, _| r().abs())).unwrap();
        let w = GcnWeights::new(DMatrix::from_fn(3, 5, |_, _| r()), DMatrix::from_fn(5, 2, |_, _| r())).unwrap();
        let perm = [2usize, 0, 3, 1];
        let p = DMatrix::from_fn(4, 4, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        let base = gcn_forward(&x, &a, &w, Activation::Sigmoid).unwrap();
        let moved = gcn_forward(&(&p * &x), &(&p * &a * p.transpose()), &w, Activation::Sigmoid).unwrap();
        assert!((moved - &p * base).abs().max() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let r = regions(&["CA", "NY"]);
        let s = adjacency_csv(&r, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0])).unwrap();
        assert_eq!(s, "CA,NY\n1,0\n0.5,1\n");
    }

    #[test]
    fn pipeline_runs() {
        let r = regions(&["CA", "NY", "TX"]);
        let recs = vec![
            flow("CA", "NY", 1, 5.0),
            flow("NY", "CA", 1, 4.0),
            flow("TX", "TX", 1, 9.0),
        ];
        let g = build_mobility_graph(&recs, &r, 0.2, false).unwrap();
        assert_eq!(g.binary.matrix.sum(), 2.0);
        assert_eq!(g.corrected.rank, 3);
        assert_eq!(g.normalized.nrows(), 3);
    }
}
