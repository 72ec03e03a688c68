//! Estimate-versus-reference statistics and calibration.

use crate::error::{Error, Result};
use crate::geomatch::{GeoPoint, LocalProjection};
use crate::iri::IriSegment;

/// Roughness-level bin edges (mm/m), lower-inclusive.
pub const BIN_EDGES: [f64; 5] = [0.0, 2.0, 4.0, 6.0, 12.0];
/// Histogram bin width (mm/m).
pub const HISTOGRAM_WIDTH: f64 = 0.1;

/// Through-origin regression slope `reference ≈ slope · estimate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub slope: f64,
}

/// `slope = Σ e·r / Σ e²` over `(estimate, reference)` pairs.
pub fn fit_calibration(pairs: &[(f64, f64)]) -> Result<Calibration> {
    if pairs.len() < 2 {
        return Err(Error::validation("pairs", "calibration needs at least two pairs"));
    }
    let ee: f64 = pairs.iter().map(|(e, _)| e * e).sum();
    if ee == 0.0 {
        return Err(Error::validation("pairs", "all estimates are zero"));
    }
    let er: f64 = pairs.iter().map(|(e, r)| e * r).sum();
    let slope = er / ee;
    if !(slope.is_finite() && slope > 0.0) {
        return Err(Error::validation("pairs", format!("fitted slope {slope} is not positive")));
    }
    Ok(Calibration { slope })
}

/// Error statistics of one roughness bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStats {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Mean of `estimate − reference` (mm/m).
    pub mean: f64,
    /// Sample standard deviation of the error (mm/m).
    pub std: f64,
    pub rmse: f64,
    pub distance_km: f64,
}

impl BinStats {
    fn from_errors(lo: f64, hi: f64, errors: &[f64], lengths: &[f64]) -> Self {
        let n = errors.len();
        let (mean, std, rmse) = if n == 0 {
            (0.0, 0.0, 0.0)
        } else {
            let nf = n as f64;
            let mean = errors.iter().sum::<f64>() / nf;
            let ss = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>();
            let std = if n > 1 { (ss / (nf - 1.0)).sqrt() } else { 0.0 };
            let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / nf).sqrt();
            (mean, std, rmse)
        };
        Self {
            lo,
            hi,
            n,
            mean,
            std,
            rmse,
            distance_km: lengths.iter().sum::<f64>() / 1000.0,
        }
    }
}

/// Counts per 0.1 mm/m IRI bin for estimates and references.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub width: f64,
    pub estimate: Vec<usize>,
    pub reference: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub bins: Vec<BinStats>,
    pub overall: BinStats,
    pub histogram: Histogram,
    /// `(estimate, reference)` of every evaluated pair.
    pub pairs: Vec<(f64, f64)>,
}

/// How estimate and reference segments are paired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    /// Same start station within half a segment.
    Station,
    /// Nearest geotagged midpoint within `d_max` metres.
    Gnss { d_max: f64 },
}

fn usable(s: &IriSegment) -> bool {
    !s.transient && !s.partial
}

/// Pairs usable (non-transient, full-length) segments.
pub fn align_segments(est: &[IriSegment], reference: &[IriSegment], how: Alignment) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    match how {
        Alignment::Station => {
            for (i, e) in est.iter().enumerate().filter(|(_, s)| usable(s)) {
                let tol = 0.5 * e.length().abs();
                let best = reference
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| usable(r))
                    .map(|(j, r)| (j, (r.start_station - e.start_station).abs()))
                    .filter(|(_, d)| *d < tol)
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((j, _)) = best {
                    pairs.push((i, j));
                }
            }
        }
        Alignment::Gnss { d_max } => {
            let tagged = |s: &[IriSegment]| -> Vec<(usize, GeoPoint)> {
                s.iter()
                    .enumerate()
                    .filter(|(_, x)| usable(x))
                    .filter_map(|(i, x)| x.geotag.map(|(lat, lon)| (i, GeoPoint { lat, lon })))
                    .collect()
            };
            let e = tagged(est);
            let r = tagged(reference);
            let proj = LocalProjection::centroid_of(e.iter().chain(&r).map(|(_, p)| p));
            let rp: Vec<(usize, (f64, f64))> = r.iter().map(|(j, p)| (*j, proj.project(p))).collect();
            for (i, p) in &e {
                let q = proj.project(p);
                let best = rp
                    .iter()
                    .map(|(j, x)| (*j, (x.0 - q.0).hypot(x.1 - q.1)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((j, d)) = best {
                    if d < d_max {
                        pairs.push((*i, j));
                    }
                }
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::validation("segments", "no overlapping estimate/reference segments"));
    }
    Ok(pairs)
}

/// Error statistics binned by reference IRI, plus an overall row and histograms.
pub fn evaluate(est: &[IriSegment], reference: &[IriSegment], how: Alignment) -> Result<EvalReport> {
    let idx = align_segments(est, reference, how)?;
    let pairs: Vec<(f64, f64)> = idx.iter().map(|&(i, j)| (est[i].iri, reference[j].iri)).collect();
    let lengths: Vec<f64> = idx.iter().map(|&(_, j)| reference[j].length()).collect();
    let mut bins = Vec::with_capacity(BIN_EDGES.len() - 1);
    for w in BIN_EDGES.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let sel: Vec<usize> = (0..pairs.len()).filter(|&k| pairs[k].1 >= lo && pairs[k].1 < hi).collect();
        let errors: Vec<f64> = sel.iter().map(|&k| pairs[k].0 - pairs[k].1).collect();
        let lens: Vec<f64> = sel.iter().map(|&k| lengths[k]).collect();
        bins.push(BinStats::from_errors(lo, hi, &errors, &lens));
    }
    let errors: Vec<f64> = pairs.iter().map(|(e, r)| e - r).collect();
    let overall = BinStats::from_errors(BIN_EDGES[0], f64::INFINITY, &errors, &lengths);

    let top = pairs.iter().fold(BIN_EDGES[4], |m, (e, r)| m.max(*e).max(*r));
    let n_hist = (top / HISTOGRAM_WIDTH).floor() as usize + 1;
    let mut histogram = Histogram {
        width: HISTOGRAM_WIDTH,
        estimate: vec![0; n_hist],
        reference: vec![0; n_hist],
    };
    let slot = |v: f64| ((v / HISTOGRAM_WIDTH).floor() as usize).min(n_hist - 1);
    for (e, r) in &pairs {
        histogram.estimate[slot(*e)] += 1;
        histogram.reference[slot(*r)] += 1;
    }
    Ok(EvalReport {
        bins,
        overall,
        histogram,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: f64, iri: f64) -> IriSegment {
        IriSegment {
            start_station: start,
            end_station: start + 40.0,
            iri,
            geotag: None,
            n_samples: 400,
            transient: false,
            partial: false,
        }
    }

    #[test]
    fn calibration_examples() {
        assert!((fit_calibration(&[(1.0, 1.39), (2.0, 2.78)]).unwrap().slope - 1.39).abs() < 1e-12);
        assert_eq!(fit_calibration(&[(3.0, 3.0), (5.0, 5.0)]).unwrap().slope, 1.0);
        assert!((fit_calibration(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]).unwrap().slope - 2.0).abs() < 1e-12);
        assert!(fit_calibration(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(fit_calibration(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn identical_segments_zero_error() {
        let r: Vec<IriSegment> = (0..10).map(|i| seg(40.0 * i as f64, 0.7 * i as f64)).collect();
        let rep = evaluate(&r, &r, Alignment::Station).unwrap();
        for b in rep.bins.iter().chain([&rep.overall]) {
            assert_eq!((b.mean, b.std, b.rmse), (0.0, 0.0, 0.0));
        }
        assert_eq!(rep.overall.n, 10);
        assert!((rep.overall.distance_km - 0.4).abs() < 1e-12);
    }

    #[test]
    fn constant_offset() {
        let r: Vec<IriSegment> = (0..12).map(|i| seg(40.0 * i as f64, 0.9 * i as f64)).collect();
        let e: Vec<IriSegment> = r.iter().map(|s| seg(s.start_station, s.iri + 0.5)).collect();
        let rep = evaluate(&e, &r, Alignment::Station).unwrap();
        for b in rep.bins.iter().filter(|b| b.n > 0) {
            assert!((b.mean - 0.5).abs() < 1e-12);
            assert!(b.std < 1e-12);
            assert!((b.rmse - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bins_are_lower_inclusive() {
        let r = vec![seg(0.0, 2.0), seg(40.0, 1.999), seg(80.0, 6.0), seg(120.0, 12.0)];
        let rep = evaluate(&r, &r, Alignment::Station).unwrap();
        let counts: Vec<usize> = rep.bins.iter().map(|b| b.n).collect();
        assert_eq!(counts, vec![1, 1, 0, 1]);
        assert_eq!(rep.overall.n, 4);
    }

    #[test]
    fn transient_and_partial_excluded() {
        let mut r = vec![seg(0.0, 1.0), seg(40.0, 1.0), seg(80.0, 1.0)];
        r[0].transient = true;
        r[2].partial = true;
        assert_eq!(evaluate(&r, &r, Alignment::Station).unwrap().overall.n, 1);
        assert!(evaluate(&r[..1], &r[..1], Alignment::Station).is_err());
    }

    #[test]
    fn gnss_alignment_pairs_by_position() {
        let mut r: Vec<IriSegment> = (0..5).map(|i| seg(40.0 * i as f64, i as f64)).collect();
        for (i, s) in r.iter_mut().enumerate() {
            s.geotag = Some((58.0, 15.0 + i as f64 * 7e-4));
        }
        let mut e = r.clone();
        for s in &mut e {
            s.start_station += 1000.0;
        }
        let rep = evaluate(&e, &r, Alignment::Gnss { d_max: 4.0 }).unwrap();
        assert_eq!(rep.overall.n, 5);
        assert_eq!(rep.overall.rmse, 0.0);
        assert!(evaluate(&e, &r, Alignment::Station).is_err());
    }
}
