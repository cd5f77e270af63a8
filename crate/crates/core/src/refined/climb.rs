use serde::{Deserialize, Serialize};

use super::raster::{cell_distance, PixelAssignment};
use crate::distances::DistanceMatrix;
use crate::{Error, Result};

/// Above this many features the default neighborhood switches to local moves.
pub const ALL_PAIRS_LIMIT: usize = 200;

/// Chebyshev radius of [`Neighborhood::AdjacentCells`].
pub const ADJACENT_RADIUS: usize = 2;

/// Candidate moves considered by [`hill_climb`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// Every pair of cells.
    AllPairs,
    /// Pairs of cells within Chebyshev distance [`ADJACENT_RADIUS`].
    AdjacentCells,
}

impl Neighborhood {
    pub fn auto(p: usize) -> Self {
        if p <= ALL_PAIRS_LIMIT {
            Neighborhood::AllPairs
        } else {
            Neighborhood::AdjacentCells
        }
    }
}

fn check_labels(a: &PixelAssignment, target: &DistanceMatrix) -> Result<()> {
    if a.labels() != target.labels() {
        return Err(Error::LabelMismatch(
            "assignment and target distances have different labels".into(),
        ));
    }
    if a.len() < 2 {
        return Err(Error::Shape("assignment cost needs at least 2 features".into()));
    }
    Ok(())
}

/// Scaled raw stress `Σ_{j<k} (t_jk − π c_jk)²` of the cell distances `c`
/// against the target `t`, with the least-squares scale `π = Σ t c / Σ c²`.
pub fn assignment_cost(a: &PixelAssignment, target: &DistanceMatrix) -> Result<f64> {
    check_labels(a, target)?;
    let p = a.len();
    let mut stc = 0.0;
    let mut scc = 0.0;
    for j in 0..p {
        for k in (j + 1)..p {
            let c = a.cell_distance(j, k);
            stc += target.get(j, k) * c;
            scc += c * c;
        }
    }
    let pi = stc / scc;
    let mut cost = 0.0;
    for j in 0..p {
        for k in (j + 1)..p {
            let r = target.get(j, k) - pi * a.cell_distance(j, k);
            cost += r * r;
        }
    }
    Ok(cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillClimbOptions {
    pub max_sweeps: usize,
    /// `None` picks [`Neighborhood::auto`].
    pub neighborhood: Option<Neighborhood>,
}

impl Default for HillClimbOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            neighborhood: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HillClimbResult {
    pub assignment: PixelAssignment,
    /// Cost before the first move and after every applied move.
    pub cost_trace: Vec<f64>,
    pub sweeps: usize,
    pub moves: usize,
}

/// Running sums from which the cost is `S_tt − S_tc² / S_cc`.
struct Sums {
    stt: f64,
    stc: f64,
    scc: f64,
}

impl Sums {
    fn cost(&self) -> f64 {
        if self.scc > 0.0 {
            self.stt - self.stc * self.stc / self.scc
        } else {
            self.stt
        }
    }
}

struct Climber<'a> {
    target: &'a DistanceMatrix,
    g: usize,
    cells: Vec<(usize, usize)>,
    /// Feature occupying each cell, row-major.
    occupant: Vec<Option<usize>>,
}

impl Climber<'_> {
    fn sums(&self) -> Sums {
        let p = self.cells.len();
        let mut s = Sums {
            stt: 0.0,
            stc: 0.0,
            scc: 0.0,
        };
        for j in 0..p {
            for k in (j + 1)..p {
                let t = self.target.get(j, k);
                let c = cell_distance(self.cells[j], self.cells[k], self.g);
                s.stt += t * t;
                s.stc += t * c;
                s.scc += c * c;
            }
        }
        s
    }

    /// Change of (S_tc, S_cc) when feature `j` moves to `to` and, if given,
    /// feature `k` moves to `j`'s old cell. The j–k distance is unchanged by
    /// a swap, so it is skipped.
    fn delta(&self, j: usize, to: (usize, usize), k: Option<usize>) -> (f64, f64) {
        let from = self.cells[j];
        let mut dtc = 0.0;
        let mut dcc = 0.0;
        for l in 0..self.cells.len() {
            if l == j || Some(l) == k {
                continue;
            }
            let cl = self.cells[l];
            let old = cell_distance(from, cl, self.g);
            let new = cell_distance(to, cl, self.g);
            dtc += self.target.get(j, l) * (new - old);
            dcc += new * new - old * old;
            if let Some(k) = k {
                let old_k = cell_distance(to, cl, self.g);
                let new_k = cell_distance(from, cl, self.g);
                dtc += self.target.get(k, l) * (new_k - old_k);
                dcc += new_k * new_k - old_k * old_k;
            }
        }
        (dtc, dcc)
    }

    fn cell_index(&self, c: (usize, usize)) -> usize {
        c.0 * self.g + c.1
    }

    fn apply(&mut self, j: usize, to: (usize, usize), k: Option<usize>) {
        let from = self.cells[j];
        let (fi, ti) = (self.cell_index(from), self.cell_index(to));
        self.cells[j] = to;
        self.occupant[ti] = Some(j);
        self.occupant[fi] = k;
        if let Some(k) = k {
            self.cells[k] = from;
        }
    }
}

/// Swap-based local search on the pixel assignment.
///
/// Each sweep visits pairs of cells `(u, v)` with `u < v` in row-major
/// order (for [`Neighborhood::AdjacentCells`] only pairs within the radius).
/// If both hold features they are swapped; if one is empty its neighbor's
/// feature moves there. A move is applied as soon as it lowers the cost by
/// more than `1e-12 · S_tt`, so the recorded trace strictly decreases. The
/// search stops after a sweep without moves or after `max_sweeps`.
pub fn hill_climb(a: &PixelAssignment, target: &DistanceMatrix, opts: HillClimbOptions) -> Result<HillClimbResult> {
    check_labels(a, target)?;
    let p = a.len();
    let g = a.grid_size();
    let neighborhood = opts.neighborhood.unwrap_or(Neighborhood::auto(p));
    let mut occupant = vec![None; g * g];
    for (j, &(r, c)) in a.cells().iter().enumerate() {
        occupant[r * g + c] = Some(j);
    }
    let mut cl = Climber {
        target,
        g,
        cells: a.cells().to_vec(),
        occupant,
    };

    let mut sums = cl.sums();
    let threshold = 1e-12 * sums.stt;
    let mut trace = vec![sums.cost()];
    let mut sweeps = 0;
    let mut moves = 0;
    let radius = match neighborhood {
        Neighborhood::AllPairs => g,
        Neighborhood::AdjacentCells => ADJACENT_RADIUS,
    };

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for u in 0..g * g {
            let (ur, uc) = (u / g, u % g);
            let r_hi = (ur + radius).min(g - 1);
            for vr in ur..=r_hi {
                let c_lo = if vr == ur { uc + 1 } else { uc.saturating_sub(radius) };
                let c_hi = (uc + radius).min(g - 1);
                for vc in c_lo..=c_hi {
                    let v = vr * g + vc;
                    let (j, to, k) = match (cl.occupant[u], cl.occupant[v]) {
                        (None, None) => continue,
                        (Some(j), other) => (j, (vr, vc), other),
                        (None, Some(k)) => (k, (ur, uc), None),
                    };
                    let (dtc, dcc) = cl.delta(j, to, k);
                    let cand = Sums {
                        stt: sums.stt,
                        stc: sums.stc + dtc,
                        scc: sums.scc + dcc,
                    };
                    let cost = cand.cost();
                    if cost < trace[trace.len() - 1] - threshold {
                        cl.apply(j, to, k);
                        sums = cand;
                        trace.push(cost);
                        moves += 1;
                        changed = true;
                    }
                }
            }
        }
        debug_assert!({
            let mut seen = vec![false; g * g];
            cl.cells
                .iter()
                .all(|&(r, c)| !std::mem::replace(&mut seen[r * g + c], true))
        });
        // Resynchronize the running sums to keep rounding from accumulating.
        sums = cl.sums();
        if !changed {
            break;
        }
    }

    let mut out = a.clone();
    out.set_cells(cl.cells);
    Ok(HillClimbResult {
        assignment: out,
        cost_trace: trace,
        sweeps,
        moves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::DistanceMatrix;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("f{j}")).collect()
    }

    fn random_target(p: usize, rng: &mut ChaCha8Rng) -> DistanceMatrix {
        DistanceMatrix::from_fn(labels(p), |_, _| rng.random::<f64>() + 0.05).unwrap()
    }

    fn random_assignment(p: usize, g: usize, rng: &mut ChaCha8Rng) -> PixelAssignment {
        let mut all: Vec<(usize, usize)> = (0..g).flat_map(|r| (0..g).map(move |c| (r, c))).collect();
        all.shuffle(rng);
        PixelAssignment::new(g, labels(p), all[..p].to_vec()).unwrap()
    }

    #[test]
    fn perfect_fit_costs_zero() {
        let a = PixelAssignment::new(3, labels(5), vec![(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)]).unwrap();
        let target = a.cell_distances().unwrap().scaled(3.7);
        assert!(assignment_cost(&a, &target).unwrap() < 1e-24);
    }

    #[test]
    fn swapping_twin_features_keeps_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = random_target(5, &mut rng);
        // Features 0 and 1 get identical target rows (and a mutual distance).
        let t = DistanceMatrix::from_fn(labels(5), |j, k| {
            let m = |x: usize| if x == 1 { 0 } else { x };
            if m(j) == m(k) {
                0.3
            } else {
                base.get(m(j), m(k))
            }
        })
        .unwrap();
        let a = random_assignment(5, 3, &mut rng);
        let mut cells = a.cells().to_vec();
        cells.swap(0, 1);
        let b = PixelAssignment::new(3, labels(5), cells).unwrap();
        let (ca, cb) = (assignment_cost(&a, &t).unwrap(), assignment_cost(&b, &t).unwrap());
        assert!((ca - cb).abs() < 1e-12);
    }

    #[test]
    fn cost_matches_explicit_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_target(9, &mut rng);
        let a = random_assignment(9, 3, &mut rng);
        let cells = a.cells();
        let c = |j: usize, k: usize| {
            let dr = cells[j].0 as f64 - cells[k].0 as f64;
            let dc = cells[j].1 as f64 - cells[k].1 as f64;
            (dr * dr + dc * dc).sqrt() / 3.0
        };
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..9 {
            for k in 0..9 {
                if j < k {
                    num += t.get(j, k) * c(j, k);
                    den += c(j, k) * c(j, k);
                }
            }
        }
        let mut want = 0.0;
        for j in 0..9 {
            for k in 0..9 {
                if j < k {
                    want += (t.get(j, k) - num / den * c(j, k)).powi(2);
                }
            }
        }
        assert!((assignment_cost(&a, &t).unwrap() - want).abs() < 1e-12);
    }

    fn permutations(items: Vec<usize>) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.clone();
            let head = rest.remove(i);
            for mut tail in permutations(rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn toy_grid_reaches_brute_force_optimum() {
        let cells = [(0, 0), (0, 1), (1, 0), (1, 1)];
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_target(4, &mut rng);
            let starts: Vec<PixelAssignment> = permutations(vec![0, 1, 2, 3])
                .into_iter()
                .map(|perm| PixelAssignment::new(2, labels(4), perm.iter().map(|&i| cells[i]).collect()).unwrap())
                .collect();
            let best = starts
                .iter()
                .map(|a| assignment_cost(a, &t).unwrap())
                .fold(f64::INFINITY, f64::min);
            let mut exact = 0;
            for s in &starts {
                let out = hill_climb(s, &t, HillClimbOptions::default()).unwrap();
                assert!(out.cost_trace.windows(2).all(|w| w[1] < w[0]));
                let fin = assignment_cost(&out.assignment, &t).unwrap();
                assert!(fin <= 1.2 * best + 1e-12);
                if fin <= best + 1e-12 * best.max(1.0) {
                    exact += 1;
                }
            }
            assert!(exact >= 12, "seed {seed}: {exact}/24 exact");
        }
    }

    #[test]
    fn local_optimum_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_target(7, &mut rng);
        let a = random_assignment(7, 3, &mut rng);
        let once = hill_climb(&a, &t, HillClimbOptions::default()).unwrap();
        let twice = hill_climb(&once.assignment, &t, HillClimbOptions::default()).unwrap();
        assert_eq!(twice.assignment, once.assignment);
        assert_eq!(twice.cost_trace.len(), 1);
    }

    #[test]
    fn never_worse_on_random_instances() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = rng.random_range(10..=16);
            let t = random_target(p, &mut rng);
            let a = random_assignment(p, 4, &mut rng);
            let hood = if seed % 2 == 0 {
                Neighborhood::AllPairs
            } else {
                Neighborhood::AdjacentCells
            };
            let opts = HillClimbOptions {
                neighborhood: Some(hood),
                ..Default::default()
            };
            let out = hill_climb(&a, &t, opts).unwrap();
            assert!(out.cost_trace.windows(2).all(|w| w[1] < w[0]));
            let before = assignment_cost(&a, &t).unwrap();
            let after = assignment_cost(&out.assignment, &t).unwrap();
            assert!(after <= before + 1e-12);
            assert!((after - out.cost_trace.last().unwrap()).abs() < 1e-9 * before.max(1.0));
        }
    }
}
