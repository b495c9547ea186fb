//! Eigenvalue continuation along a path: tracks, their certificates, loop
//! monodromy, transported eigenvector sections, and the diagonalizing
//! unitary family.
//!
//! Matching between consecutive frames is nearest-value inside a safety ball
//! of a quarter of the local eigenvalue separation, which keeps tracks from
//! being confused with one another. A step is additionally *certified* when
//! the move stays within a quarter of the full separation radius delta
//! (which also keeps clear of zero and the threshold circle); births and
//! deaths through the threshold are legal but never certified, and a value
//! appearing or disappearing away from the threshold refuses with
//! `RefineGrid`.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, CVector, C64};
use crate::path::OperatorPath;
use crate::perm::Permutation;
use crate::spectral::{eigen_frame, SpectralFrame};

/// One continued eigenvalue trajectory.
#[derive(Debug, Clone)]
pub struct Track {
    pub birth: usize,
    /// `values[k]` is the eigenvalue at grid point `birth + k`.
    pub values: Vec<C64>,
    /// Column of the eigenvalue in the frame at `birth + k`.
    pub cols: Vec<usize>,
    /// Per-step certificates (`|dλ| < δ/4` with a unique candidate).
    pub certified: Vec<bool>,
    /// The track emerged from below the threshold.
    pub born_from_tail: bool,
    /// The track sank below the threshold.
    pub died_into_tail: bool,
}

impl Track {
    pub fn death(&self) -> usize {
        self.birth + self.values.len() - 1
    }

    pub fn spans(&self, grid: usize) -> bool {
        self.birth == 0 && self.death() == grid
    }

    pub fn alive_at(&self, g: usize) -> bool {
        g >= self.birth && g <= self.death()
    }

    pub fn value_at(&self, g: usize) -> Option<C64> {
        self.alive_at(g).then(|| self.values[g - self.birth])
    }

    pub fn col_at(&self, g: usize) -> Option<usize> {
        self.alive_at(g).then(|| self.cols[g - self.birth])
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn fully_certified(&self) -> bool {
        self.certified.iter().all(|&c| c)
    }
}

/// The braid of continued eigenvalues over the grid.
#[derive(Debug)]
pub struct EigenBraid {
    pub threshold: f64,
    pub grid: usize,
    pub is_loop: bool,
    pub frames: Vec<SpectralFrame>,
    pub tracks: Vec<Track>,
    /// For loops with full tracks: permutation with
    /// `track[i](0) = track[monodromy(i)](1)` within certification.
    pub monodromy: Option<Permutation>,
}

impl EigenBraid {
    pub fn full_tracks(&self) -> bool {
        self.tracks.iter().all(|t| t.spans(self.grid))
    }
}

fn delta_radius(value: C64, separation: f64, threshold: f64) -> f64 {
    let to_zero = value.norm();
    let to_circle = value.norm() - threshold;
    separation.min(to_zero).min(to_circle) / 3.0
}

/// Trace all eigenvalue tracks of a validated path.
pub fn trace_braid(path: &OperatorPath, threshold: f64, tol: &Tolerances) -> Result<EigenBraid> {
    let grid = path.grid;
    let mut frames = Vec::with_capacity(grid + 1);
    let mut full_values: Vec<Vec<C64>> = Vec::with_capacity(grid + 1);
    for g in 0..=grid {
        let (vals, _) = matrix::normal_eig(path.matrix(g))?;
        full_values.push(vals);
        frames.push(eigen_frame(&path.samples[g], g, threshold, tol)?);
    }

    let mut tracks: Vec<Track> = Vec::new();
    let mut alive: Vec<usize> = Vec::new();
    for col in 0..frames[0].len() {
        tracks.push(Track {
            birth: 0,
            values: vec![frames[0].values[col]],
            cols: vec![col],
            certified: vec![],
            born_from_tail: false,
            died_into_tail: false,
        });
        alive.push(tracks.len() - 1);
    }

    let scale = path.max_norm().max(1.0);
    for g in 0..grid {
        let next = &frames[g + 1];
        let mut claims: Vec<Option<(usize, f64, bool)>> = vec![None; alive.len()];
        let mut claimed_by: Vec<Option<usize>> = vec![None; next.len()];
        // eigenvalues of normal matrices drift at most by the sample gap, so
        // twice the gap bounds any legitimate continuation; the separation
        // quarter keeps distinct tracks from being confused
        let step_cap = 2.0 * path.step_gaps[g] + 1e-12 * scale;

        for (pos, &ti) in alive.iter().enumerate() {
            let cur = *tracks[ti].values.last().expect("alive track has values");
            let sep = frames[g].separation(tracks[ti].cols[g - tracks[ti].birth]);
            let safe_radius = (sep / 4.0).min(step_cap);
            let mut in_ball = 0usize;
            let mut best: Option<(usize, f64)> = None;
            for (j, w) in next.values.iter().enumerate() {
                let d = (cur - w).norm();
                if d < safe_radius {
                    in_ball += 1;
                }
                if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                    best = Some((j, d));
                }
            }
            match best {
                Some((j, d)) if d < safe_radius && in_ball == 1 => {
                    let delta = delta_radius(cur, sep, threshold);
                    let certified = d < delta / 4.0
                        && next
                            .values
                            .iter()
                            .filter(|w| (cur - *w).norm() < delta / 4.0)
                            .count()
                            == 1;
                    if let Some(other) = claimed_by[j] {
                        return Err(Error::RefineGrid {
                            step: g,
                            detail: format!(
                                "tracks {other} and {ti} both continue to the same eigenvalue"
                            ),
                        });
                    }
                    claimed_by[j] = Some(ti);
                    claims[pos] = Some((j, d, certified));
                }
                _ => {
                    // no retained continuation; legal only as a death through
                    // the threshold
                    let sunk = full_values[g + 1]
                        .iter()
                        .filter(|w| w.norm() <= threshold)
                        .map(|w| (cur - w).norm())
                        .fold(f64::INFINITY, f64::min);
                    if sunk < safe_radius {
                        claims[pos] = None; // death
                    } else {
                        return Err(Error::RefineGrid {
                            step: g,
                            detail: format!(
                                "track {ti} at {cur} has no safe continuation (separation {sep:.3e})"
                            ),
                        });
                    }
                }
            }
        }

        let mut next_alive = Vec::new();
        for (pos, &ti) in alive.iter().enumerate() {
            match claims[pos] {
                Some((j, _, certified)) => {
                    tracks[ti].values.push(next.values[j]);
                    tracks[ti].cols.push(j);
                    tracks[ti].certified.push(certified);
                    next_alive.push(ti);
                }
                None => {
                    tracks[ti].died_into_tail = true;
                }
            }
        }

        for j in 0..next.len() {
            if claimed_by[j].is_some() {
                continue;
            }
            // a new eigenvalue above the threshold; it must have climbed out
            // of the tail at the previous point
            let value = next.values[j];
            let radius = (next.separation(j) / 4.0).min(step_cap);
            let nearest_prev = full_values[g]
                .iter()
                .copied()
                .min_by(|a, b| {
                    (value - a)
                        .norm()
                        .partial_cmp(&(value - b).norm())
                        .expect("finite")
                })
                .expect("nonempty spectrum");
            let d = (value - nearest_prev).norm();
            if d >= radius || nearest_prev.norm() > threshold {
                return Err(Error::RefineGrid {
                    step: g,
                    detail: format!(
                        "eigenvalue {value} appears at point {} without a tail origin",
                        g + 1
                    ),
                });
            }
            tracks.push(Track {
                birth: g + 1,
                values: vec![value],
                cols: vec![j],
                certified: vec![],
                born_from_tail: true,
                died_into_tail: false,
            });
            next_alive.push(tracks.len() - 1);
        }
        alive = next_alive;
    }

    let mut braid = EigenBraid {
        threshold,
        grid,
        is_loop: path.is_loop,
        frames,
        tracks,
        monodromy: None,
    };
    if braid.is_loop && braid.full_tracks() {
        braid.monodromy = closure_permutation(&braid).ok();
    }
    Ok(braid)
}

/// Match start values against end values: sigma with
/// `track[i](0) = track[sigma(i)](1)`, certified by the delta/4 rule.
fn closure_permutation(braid: &EigenBraid) -> Result<Permutation> {
    let n = braid.tracks.len();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (i, t) in braid.tracks.iter().enumerate() {
        let start = t.values[0];
        let sep = braid.frames[0].separation(t.cols[0]);
        let radius = delta_radius(start, sep, braid.threshold) / 4.0;
        let mut hits = 0usize;
        let mut best: Option<(usize, f64)> = None;
        for (j, u) in braid.tracks.iter().enumerate() {
            let end = *u.values.last().expect("track values");
            let d = (start - end).norm();
            if d < radius {
                hits += 1;
            }
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d < radius && hits == 1 && !used[j] => {
                map[i] = j;
                used[j] = true;
            }
            _ => {
                return Err(Error::NoCertifiedClosure(format!(
                    "start value {start} of track {i} has no unique certified end partner"
                )))
            }
        }
    }
    Permutation::from_map(map)
}

/// Why a track fails to cover the whole interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    ModulusBelowThreshold,
    NoSafeMatch,
}

#[derive(Debug, Clone)]
pub struct Condition1Failure {
    pub track: usize,
    /// Grid index where the track is born (> 0) or dies (< G).
    pub boundary_index: usize,
    pub reason: FailureReason,
    /// The track decays into the tail at this boundary.
    pub limit_zero: bool,
}

/// Verdict on whether every eigenvalue above the threshold extends over the
/// whole grid.
#[derive(Debug, Clone)]
pub struct Condition1Report {
    pub satisfied: bool,
    pub failures: Vec<Condition1Failure>,
}

/// Every track must span the full grid; symmetric in both orientations
/// since births and deaths are both boundary defects of the continuation.
pub fn check_condition1(braid: &EigenBraid) -> Condition1Report {
    let mut failures = Vec::new();
    for (i, t) in braid.tracks.iter().enumerate() {
        if t.birth > 0 {
            failures.push(Condition1Failure {
                track: i,
                boundary_index: t.birth,
                reason: if t.born_from_tail {
                    FailureReason::ModulusBelowThreshold
                } else {
                    FailureReason::NoSafeMatch
                },
                limit_zero: t.born_from_tail,
            });
        }
        if t.death() < braid.grid {
            failures.push(Condition1Failure {
                track: i,
                boundary_index: t.death(),
                reason: if t.died_into_tail {
                    FailureReason::ModulusBelowThreshold
                } else {
                    FailureReason::NoSafeMatch
                },
                limit_zero: t.died_into_tail,
            });
        }
    }
    Condition1Report {
        satisfied: failures.is_empty(),
        failures,
    }
}

/// The loop monodromy: requires a loop braid with full tracks and a
/// certified closure matching.
pub fn monodromy(braid: &EigenBraid) -> Result<Permutation> {
    if !braid.is_loop {
        return Err(Error::NotALoop(f64::NAN));
    }
    if !braid.full_tracks() {
        return Err(Error::Condition1Missing);
    }
    match &braid.monodromy {
        Some(p) => Ok(p.clone()),
        None => closure_permutation(braid),
    }
}

/// A braid with transported unit eigenvector sections along each track.
#[derive(Debug)]
pub struct FramedBraid {
    pub braid: EigenBraid,
    /// `sections[t][k]` is the section of track `t` at grid point
    /// `birth + k`.
    pub sections: Vec<Vec<CVector>>,
}

/// Transport sections: at each step the previous section is projected onto
/// the next eigenline and renormalized, so successive overlaps stay real
/// positive (maximal-overlap phase convention).
pub fn frame_transport(path: &OperatorPath, braid: EigenBraid) -> Result<FramedBraid> {
    if braid.grid != path.grid || braid.frames[0].dim() != path.dim() {
        return Err(Error::DimMismatch(
            "braid does not belong to this path".to_string(),
        ));
    }
    let mut sections = Vec::with_capacity(braid.tracks.len());
    for t in &braid.tracks {
        let mut secs: Vec<CVector> = Vec::with_capacity(t.values.len());
        let mut cur = braid.frames[t.birth].vector(t.cols[0]);
        secs.push(cur.clone());
        for k in 1..t.values.len() {
            let g = t.birth + k;
            let v = braid.frames[g].vector(t.cols[k]);
            let overlap = matrix::inner(&v, &cur);
            if overlap.norm() < 0.5 {
                return Err(Error::TransportBreakdown {
                    step: g - 1,
                    overlap: overlap.norm(),
                });
            }
            // normalize(P_next cur) = v * phase(<v, cur>)
            let phase = overlap / overlap.norm();
            cur = v.mapv(|z| z * phase);
            secs.push(cur.clone());
        }
        sections.push(secs);
    }
    Ok(FramedBraid { braid, sections })
}

impl FramedBraid {
    pub fn section(&self, track: usize, g: usize) -> Option<&CVector> {
        let t = &self.braid.tracks[track];
        t.alive_at(g).then(|| &self.sections[track][g - t.birth])
    }
}

/// The transported diagonalizing family: unitary at every grid point, with
/// the track sections as leading columns.
#[derive(Debug)]
pub struct DiagonalizedPath {
    pub unitaries: Vec<CMatrix>,
    /// `values[g][t]` is track t's eigenvalue at grid point g.
    pub values: Vec<Vec<C64>>,
    pub track_count: usize,
}

/// Assemble `U(x_g)` with column t the section of track t, completed to a
/// unitary deterministically, and verify the diagonalization residual on
/// the retained block.
pub fn diagonalize_path(path: &OperatorPath, framed: &FramedBraid) -> Result<DiagonalizedPath> {
    let braid = &framed.braid;
    if !braid.full_tracks() {
        return Err(Error::Condition1Missing);
    }
    let grid = braid.grid;
    let dim = path.dim();
    let s = braid.tracks.len();
    let mut unitaries = Vec::with_capacity(grid + 1);
    let mut values = Vec::with_capacity(grid + 1);
    let scale = path.max_norm().max(1.0);
    for g in 0..=grid {
        let mut basis = CMatrix::zeros((dim, s));
        for t in 0..s {
            basis
                .column_mut(t)
                .assign(framed.section(t, g).expect("full track"));
        }
        let u = matrix::complete_unitary(&basis).map_err(|_| Error::SpanDeficient(g))?;
        let lam: Vec<C64> = (0..s)
            .map(|t| braid.tracks[t].value_at(g).expect("full track"))
            .collect();
        // residual on the retained block
        let conj = matrix::adjoint(&u).dot(path.matrix(g)).dot(&u);
        let mut worst = 0.0_f64;
        for a in 0..s {
            for b in 0..s {
                let expect = if a == b { lam[a] } else { C64::new(0.0, 0.0) };
                worst = worst.max((conj[[a, b]] - expect).norm());
            }
        }
        if worst > 1e-7 * scale {
            return Err(Error::SpanDeficient(g));
        }
        unitaries.push(u);
        values.push(lam);
    }
    Ok(DiagonalizedPath {
        unitaries,
        values,
        track_count: s,
    })
}

/// One stage of the nested compression ladder.
#[derive(Debug)]
pub struct CompressedStage {
    pub rank: usize,
    pub samples: Vec<CMatrix>,
    pub max_deviation: f64,
}

/// Nested finite-rank compressions `P_k U Λ U* P_k` for k = 1..=n, built
/// from the diagonalizing family. The diagonal entries are shared across
/// stages, so the nesting property of the ladder holds by construction.
pub fn build_condition2_sequence(
    path: &OperatorPath,
    framed: &FramedBraid,
    diag: &DiagonalizedPath,
    n: usize,
) -> Result<Vec<CompressedStage>> {
    if !framed.braid.full_tracks() {
        return Err(Error::Condition1Missing);
    }
    let dim = path.dim();
    let n = n.min(dim);
    let mut stages = Vec::with_capacity(n);
    for k in 1..=n {
        let mut samples = Vec::with_capacity(path.grid + 1);
        let mut worst = 0.0_f64;
        for g in 0..=path.grid {
            let u = &diag.unitaries[g];
            let mut lam = vec![C64::new(0.0, 0.0); dim];
            for (t, v) in diag.values[g].iter().enumerate() {
                lam[t] = *v;
            }
            let core = u.dot(&matrix::from_diag(&lam)).dot(&matrix::adjoint(u));
            let uk = matrix::compress(&core, k);
            worst = worst.max(matrix::op_norm(&(&uk - path.matrix(g))));
            samples.push(uk);
        }
        stages.push(CompressedStage {
            rank: k,
            samples,
            max_deviation: worst,
        });
    }
    Ok(stages)
}
