use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::{derive_seed_n, rng};

/// Clip counts of one speaker, the unit the balancer moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerStats {
    pub speaker: String,
    pub clips: usize,
    /// Positive clips per label type.
    pub positives: [usize; 6],
    pub female: usize,
    pub male: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceTargets {
    /// Target fraction of clips per part; normalized internally.
    pub size_shares: Vec<f64>,
    /// Size deviation tolerated before it counts, as a fraction of the
    /// part's target size.
    pub size_tolerance: f64,
    /// Reference label rates in percent; pooled rates when `None`.
    pub label_rates_pct: Option<[f64; 6]>,
    /// Additional hill-climbing runs from random or perturbed starting
    /// assignments.
    pub restarts: usize,
    /// Accepted improvements allowed per run.
    pub max_iter: usize,
}

impl BalanceTargets {
    pub fn equal(n_parts: usize, size_tolerance: f64) -> Self {
        Self {
            size_shares: vec![1.0 / n_parts as f64; n_parts],
            size_tolerance,
            label_rates_pct: None,
            restarts: 128,
            max_iter: 10_000,
        }
    }
}

/// Balancing objective, compared lexicographically in field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    /// Clips outside the per-part size tolerance, as a fraction of all clips.
    pub size_excess: f64,
    /// Largest absolute gap, in percentage points, between any part's label
    /// rate and the reference rate. Empty parts count as 100.
    pub label_deviation: f64,
    /// Largest gap, in percentage points, between any part's female share
    /// and the pooled female share, over clips of known gender.
    pub gender_deviation: f64,
    /// Sum of squared label and gender gaps over all parts; a final
    /// tie-breaker that lets the search cross plateaus of the maxima.
    pub spread: f64,
}

const EPS: f64 = 1e-9;

impl Objective {
    pub fn better_than(&self, other: &Objective) -> bool {
        for (a, b) in [
            (self.size_excess, other.size_excess),
            (self.label_deviation, other.label_deviation),
            (self.gender_deviation, other.gender_deviation),
            (self.spread, other.spread),
        ] {
            if a < b - EPS {
                return true;
            }
            if a > b + EPS {
                return false;
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    /// Part index per input speaker.
    pub assignment: Vec<usize>,
    pub objective: Objective,
    /// Objective of the greedy construction before local search.
    pub greedy: Objective,
    pub iterations: usize,
}

#[derive(Clone, Default)]
struct PartAgg {
    clips: usize,
    positives: [usize; 6],
    female: usize,
    male: usize,
}

impl PartAgg {
    fn add(&mut self, s: &SpeakerStats) {
        self.clips += s.clips;
        for t in 0..6 {
            self.positives[t] += s.positives[t];
        }
        self.female += s.female;
        self.male += s.male;
    }

    fn remove(&mut self, s: &SpeakerStats) {
        self.clips -= s.clips;
        for t in 0..6 {
            self.positives[t] -= s.positives[t];
        }
        self.female -= s.female;
        self.male -= s.male;
    }
}

struct Problem<'a> {
    speakers: &'a [SpeakerStats],
    targets: Vec<f64>,
    tolerance: f64,
    total: usize,
    rates: [f64; 6],
    female_share: Option<f64>,
}

impl<'a> Problem<'a> {
    fn new(speakers: &'a [SpeakerStats], t: &BalanceTargets) -> Self {
        let total: usize = speakers.iter().map(|s| s.clips).sum();
        let share_sum: f64 = t.size_shares.iter().sum();
        let targets = t
            .size_shares
            .iter()
            .map(|s| s / share_sum * total as f64)
            .collect();
        let mut pooled = PartAgg::default();
        for s in speakers {
            pooled.add(s);
        }
        let rates = t.label_rates_pct.unwrap_or_else(|| {
            let mut r = [0.0; 6];
            if total > 0 {
                for (i, v) in r.iter_mut().enumerate() {
                    *v = 100.0 * pooled.positives[i] as f64 / total as f64;
                }
            }
            r
        });
        let known = pooled.female + pooled.male;
        Self {
            speakers,
            targets,
            tolerance: t.size_tolerance.max(0.0),
            total,
            rates,
            female_share: (known > 0).then(|| 100.0 * pooled.female as f64 / known as f64),
        }
    }

    fn aggregate(&self, assignment: &[usize]) -> Vec<PartAgg> {
        let mut parts = vec![PartAgg::default(); self.targets.len()];
        for (s, &p) in self.speakers.iter().zip(assignment) {
            parts[p].add(s);
        }
        parts
    }

    fn objective(&self, parts: &[PartAgg]) -> Objective {
        let mut size_excess = 0.0;
        let mut label_deviation: f64 = 0.0;
        let mut gender_deviation: f64 = 0.0;
        let mut spread = 0.0;
        for (agg, &target) in parts.iter().zip(&self.targets) {
            let gap = (agg.clips as f64 - target).abs() - self.tolerance * target;
            if gap > 0.0 {
                size_excess += gap;
            }
            if agg.clips == 0 {
                label_deviation = label_deviation.max(100.0);
            } else {
                for t in 0..6 {
                    let gap = 100.0 * agg.positives[t] as f64 / agg.clips as f64 - self.rates[t];
                    label_deviation = label_deviation.max(gap.abs());
                    spread += gap * gap;
                }
            }
            let known = agg.female + agg.male;
            if let (Some(f), true) = (self.female_share, known > 0) {
                let gap = 100.0 * agg.female as f64 / known as f64 - f;
                gender_deviation = gender_deviation.max(gap.abs());
                spread += gap * gap;
            }
        }
        Objective {
            size_excess: if self.total == 0 {
                0.0
            } else {
                size_excess / self.total as f64
            },
            label_deviation,
            gender_deviation,
            spread,
        }
    }

    /// Largest speaker first, each into the part furthest below its target
    /// share.
    fn greedy(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.speakers.len()).collect();
        order.sort_by(|&a, &b| {
            self.speakers[b]
                .clips
                .cmp(&self.speakers[a].clips)
                .then(self.speakers[a].speaker.cmp(&self.speakers[b].speaker))
        });
        let mut sizes = vec![0usize; self.targets.len()];
        let mut assignment = vec![0; self.speakers.len()];
        for s in order {
            let part = (0..sizes.len())
                .min_by(|&a, &b| {
                    let fa = sizes[a] as f64 / self.targets[a].max(f64::MIN_POSITIVE);
                    let fb = sizes[b] as f64 / self.targets[b].max(f64::MIN_POSITIVE);
                    fa.total_cmp(&fb).then(a.cmp(&b))
                })
                .expect("at least one part");
            sizes[part] += self.speakers[s].clips;
            assignment[s] = part;
        }
        assignment
    }

    /// First-improvement descent over single-speaker moves and pairwise
    /// swaps, scanned in a seeded random order.
    fn climb<R: Rng>(
        &self,
        assignment: &mut [usize],
        max_iter: usize,
        rng: &mut R,
    ) -> (Objective, usize) {
        let n_parts = self.targets.len();
        let mut parts = self.aggregate(assignment);
        let mut current = self.objective(&parts);
        let mut order: Vec<usize> = (0..self.speakers.len()).collect();
        let mut iterations = 0;
        'outer: while iterations < max_iter {
            order.shuffle(rng);
            for &s in &order {
                let from = assignment[s];
                for to in (0..n_parts).filter(|&p| p != from) {
                    parts[from].remove(&self.speakers[s]);
                    parts[to].add(&self.speakers[s]);
                    let candidate = self.objective(&parts);
                    if candidate.better_than(&current) {
                        assignment[s] = to;
                        current = candidate;
                        iterations += 1;
                        continue 'outer;
                    }
                    parts[to].remove(&self.speakers[s]);
                    parts[from].add(&self.speakers[s]);
                }
            }
            for (i, &a) in order.iter().enumerate() {
                for &b in &order[i + 1..] {
                    let (pa, pb) = (assignment[a], assignment[b]);
                    if pa == pb {
                        continue;
                    }
                    let (sa, sb) = (&self.speakers[a], &self.speakers[b]);
                    parts[pa].remove(sa);
                    parts[pb].remove(sb);
                    parts[pa].add(sb);
                    parts[pb].add(sa);
                    let candidate = self.objective(&parts);
                    if candidate.better_than(&current) {
                        assignment[a] = pb;
                        assignment[b] = pa;
                        current = candidate;
                        iterations += 1;
                        continue 'outer;
                    }
                    parts[pa].remove(sb);
                    parts[pb].remove(sa);
                    parts[pa].add(sa);
                    parts[pb].add(sb);
                }
            }
            break;
        }
        (current, iterations)
    }
}

/// Assigns whole speakers to parts, minimizing size excess, then label-rate
/// deviation, then gender deviation. Never fails; an infeasible size target
/// shows up as a positive `size_excess`.
pub fn balance_partition(
    speakers: &[SpeakerStats],
    targets: &BalanceTargets,
    seed: u64,
) -> Balance {
    assert!(
        targets.size_shares.len() >= 2,
        "at least two parts required"
    );
    let problem = Problem::new(speakers, targets);
    let n_parts = targets.size_shares.len();

    let mut assignment = problem.greedy();
    let greedy = problem.objective(&problem.aggregate(&assignment));
    let mut r = rng(derive_seed_n(seed, 0));
    let (mut best_obj, mut iterations) = problem.climb(&mut assignment, targets.max_iter, &mut r);
    let mut best = assignment;

    // Odd restarts start from scratch; even ones perturb the best assignment
    // found so far by reassigning a few random speakers.
    for restart in 1..=targets.restarts {
        let mut r = rng(derive_seed_n(seed, restart as u64));
        let mut candidate: Vec<usize> = if restart % 2 == 1 || speakers.is_empty() {
            (0..speakers.len())
                .map(|_| r.gen_range(0..n_parts))
                .collect()
        } else {
            let mut c = best.clone();
            for _ in 0..r.gen_range(2..=4) {
                let s = r.gen_range(0..speakers.len());
                c[s] = r.gen_range(0..n_parts);
            }
            c
        };
        let (obj, it) = problem.climb(&mut candidate, targets.max_iter, &mut r);
        iterations += it;
        if obj.better_than(&best_obj) {
            best_obj = obj;
            best = candidate;
        }
    }

    Balance {
        assignment: best,
        objective: best_obj,
        greedy,
        iterations,
    }
}

/// Objective of an arbitrary assignment under the same targets.
pub fn evaluate_assignment(
    speakers: &[SpeakerStats],
    targets: &BalanceTargets,
    assignment: &[usize],
) -> Objective {
    let problem = Problem::new(speakers, targets);
    problem.objective(&problem.aggregate(assignment))
}
