//! Permutation testing of the IID assumption.
//!
//! A battery of statistics is computed on the original sequence and on
//! seeded Fisher-Yates shuffles of it. Under IID every ordering is equally
//! likely, so the original should rank somewhere unremarkable; a statistic
//! fails when the original lands in the extreme 0.05% of either tail.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{input, Result};

pub const MIN_IID_SAMPLES: usize = 100_000;
pub const MIN_SHUFFLES: usize = 100;
pub const DEFAULT_SHUFFLES: usize = 1000;
pub const DEFAULT_SHUFFLE_SEED: u64 = 0x005e_ed1d;

const LAGS: [usize; 5] = [1, 2, 8, 16, 32];
/// One-sided tail fraction outside of which the original is rejected.
const TAIL_FRACTION: f64 = 0.0005;

const NAMES: [&str; 18] = [
    "excursion",
    "directional_runs",
    "longest_directional_run",
    "increases_decreases",
    "median_runs",
    "longest_median_run",
    "average_collision",
    "maximum_collision",
    "periodicity_lag1",
    "periodicity_lag2",
    "periodicity_lag8",
    "periodicity_lag16",
    "periodicity_lag32",
    "covariance_lag1",
    "covariance_lag2",
    "covariance_lag8",
    "covariance_lag16",
    "covariance_lag32",
];
const N_STATS: usize = NAMES.len();

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticOutcome {
    pub name: &'static str,
    pub original: f64,
    /// Shuffles whose statistic exceeded the original.
    pub greater: usize,
    /// Shuffles whose statistic equalled the original.
    pub equal: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IidReport {
    pub sample_count: usize,
    pub num_shuffles: usize,
    pub seed: u64,
    pub binary: bool,
    pub statistics: Vec<StatisticOutcome>,
    pub passed: bool,
}

impl IidReport {
    pub fn failures(&self) -> impl Iterator<Item = &StatisticOutcome> {
        self.statistics.iter().filter(|s| !s.passed)
    }
}

struct Context {
    mean: f64,
    median: f64,
    binary: bool,
}

fn median(symbols: &[u8]) -> f64 {
    let mut hist = [0usize; 256];
    for &s in symbols {
        hist[usize::from(s)] += 1;
    }
    let n = symbols.len();
    let kth = |k: usize| {
        let mut acc = 0;
        for (v, &c) in hist.iter().enumerate() {
            acc += c;
            if acc > k {
                return v as f64;
            }
        }
        255.0
    };
    if n % 2 == 1 {
        kth(n / 2)
    } else {
        0.5 * (kth(n / 2 - 1) + kth(n / 2))
    }
}

/// Packs eight binary symbols per byte, MSB first; a trailing partial group
/// is dropped.
fn pack_binary(bits: &[u8], out: &mut Vec<u8>) {
    out.clear();
    out.extend(
        bits.chunks_exact(8)
            .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b)),
    );
}

fn runs(signs: impl Iterator<Item = bool>) -> (usize, usize) {
    let mut count = 0;
    let mut longest = 0;
    let mut current = 0;
    let mut prev = None;
    for s in signs {
        if Some(s) == prev {
            current += 1;
        } else {
            count += 1;
            current = 1;
            prev = Some(s);
        }
        longest = longest.max(current);
    }
    (count, longest)
}

fn collisions(s: &[u8]) -> (f64, f64) {
    let mut total = 0u64;
    let mut count = 0u64;
    let mut max = 0u64;
    let mut i = 0;
    while i < s.len() {
        let mut seen = [0u64; 4];
        let mut j = i;
        loop {
            if j == s.len() {
                let avg = if count == 0 {
                    0.0
                } else {
                    total as f64 / count as f64
                };
                return (avg, max as f64);
            }
            let v = usize::from(s[j]);
            let bit = 1u64 << (v & 63);
            if seen[v >> 6] & bit != 0 {
                break;
            }
            seen[v >> 6] |= bit;
            j += 1;
        }
        let len = (j - i + 1) as u64;
        total += len;
        count += 1;
        max = max.max(len);
        i = j + 1;
    }
    let avg = if count == 0 {
        0.0
    } else {
        total as f64 / count as f64
    };
    (avg, max as f64)
}

fn statistics(s: &[u8], ctx: &Context, scratch: &mut Vec<u8>) -> [f64; N_STATS] {
    let mut out = [0.0; N_STATS];

    let mut cum = 0.0f64;
    let mut excursion = 0.0f64;
    for &x in s {
        cum += f64::from(x) - ctx.mean;
        excursion = excursion.max(cum.abs());
    }
    out[0] = excursion;

    // Directional and collision statistics see bytes even for binary input.
    let seq: &[u8] = if ctx.binary {
        pack_binary(s, scratch);
        scratch
    } else {
        s
    };
    let ups = seq.windows(2).map(|w| w[0] <= w[1]);
    let (dir_runs, dir_longest) = runs(ups);
    let increases = seq.windows(2).filter(|w| w[0] <= w[1]).count();
    let decreases = seq.len().saturating_sub(1) - increases;
    out[1] = dir_runs as f64;
    out[2] = dir_longest as f64;
    out[3] = increases.max(decreases) as f64;

    let (med_runs, med_longest) = runs(s.iter().map(|&x| f64::from(x) >= ctx.median));
    out[4] = med_runs as f64;
    out[5] = med_longest as f64;

    let (avg, max) = collisions(seq);
    out[6] = avg;
    out[7] = max;

    for (k, &lag) in LAGS.iter().enumerate() {
        if s.len() <= lag {
            continue;
        }
        let (a, b) = (&s[..s.len() - lag], &s[lag..]);
        let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
        let cov: u64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| u64::from(x) * u64::from(y))
            .sum();
        out[8 + k] = same as f64;
        out[13 + k] = cov as f64;
    }
    out
}

fn shuffle(data: &mut [u8], rng: &mut ChaCha8Rng) {
    for i in (1..data.len()).rev() {
        let bound = (i + 1) as u128;
        let j = ((u128::from(rng.next_u64()) * bound) >> 64) as usize;
        data.swap(i, j);
    }
}

/// Runs the permutation battery with `num_shuffles` shuffles keyed by `seed`.
///
/// Shuffle `k` is drawn from keystream `k` of the seed, so the verdict does
/// not depend on how shuffles are scheduled across threads.
pub fn iid_permutation_test(symbols: &[u8], num_shuffles: usize, seed: u64) -> Result<IidReport> {
    if symbols.len() < MIN_IID_SAMPLES {
        return input(format!(
            "IID testing needs at least {MIN_IID_SAMPLES} samples, got {}",
            symbols.len()
        ));
    }
    if num_shuffles < MIN_SHUFFLES {
        return input(format!(
            "IID testing needs at least {MIN_SHUFFLES} shuffles, got {num_shuffles}"
        ));
    }
    let ctx = Context {
        mean: symbols.iter().map(|&x| f64::from(x)).sum::<f64>() / symbols.len() as f64,
        median: median(symbols),
        binary: symbols.iter().all(|&x| x <= 1),
    };
    let original = statistics(symbols, &ctx, &mut Vec::new());

    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(num_shuffles);
    let per_worker = num_shuffles.div_ceil(workers);
    let tallies: Vec<[(usize, usize); N_STATS]> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let ctx = &ctx;
                let original = &original;
                scope.spawn(move || {
                    let mut tally = [(0usize, 0usize); N_STATS];
                    let mut work = vec![0u8; symbols.len()];
                    let mut scratch = Vec::new();
                    let first = w * per_worker;
                    let last = ((w + 1) * per_worker).min(num_shuffles);
                    for k in first..last {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(k as u64);
                        work.copy_from_slice(symbols);
                        shuffle(&mut work, &mut rng);
                        let stats = statistics(&work, ctx, &mut scratch);
                        for (t, (&sv, &ov)) in tally.iter_mut().zip(stats.iter().zip(original)) {
                            if sv > ov {
                                t.0 += 1;
                            } else if sv == ov {
                                t.1 += 1;
                            }
                        }
                    }
                    tally
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("shuffle worker panicked"))
            .collect()
    });

    let cutoff = (TAIL_FRACTION * num_shuffles as f64).floor() as usize;
    let statistics: Vec<StatisticOutcome> = (0..N_STATS)
        .map(|i| {
            let (greater, equal) = tallies
                .iter()
                .fold((0, 0), |acc, t| (acc.0 + t[i].0, acc.1 + t[i].1));
            let passed = greater + equal > cutoff && greater < num_shuffles - cutoff;
            StatisticOutcome {
                name: NAMES[i],
                original: original[i],
                greater,
                equal,
                passed,
            }
        })
        .collect();
    let passed = statistics.iter().all(|s| s.passed);
    Ok(IidReport {
        sample_count: symbols.len(),
        num_shuffles,
        seed,
        binary: ctx.binary,
        statistics,
        passed,
    })
}
