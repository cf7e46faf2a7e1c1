//! Straight-from-the-definition feature implementations built on a full
//! distance matrix. Deliberately naive; used only to cross-check the library.

use std::collections::HashMap;

pub struct Oracle {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub d: Vec<Vec<f64>>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 { 0.0 } else { cov / (va * vb).sqrt() }
}

fn div_or(a: f64, b: f64) -> f64 {
    match (a == 0.0, b == 0.0) {
        (true, true) => 1.0,
        (false, true) => 0.0,
        _ => a / b,
    }
}

impl Oracle {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                d[i][j] = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            }
        }
        Oracle { x, y, d }
    }

    /// Indices sorted by fitness, index breaking ties.
    fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.y.len()).collect();
        idx.sort_by(|&a, &b| self.y[a].total_cmp(&self.y[b]).then(a.cmp(&b)));
        idx
    }

    /// `[ratio_mean, ratio_median, diff_mean, diff_median]` for each percentage.
    pub fn dispersion(&self, pcts: &[usize]) -> Vec<[f64; 4]> {
        let n = self.y.len();
        let order = self.ranking();
        let pair_dists = |set: &[usize]| {
            let mut v = Vec::new();
            for a in 0..set.len() {
                for b in a + 1..set.len() {
                    v.push(self.d[set[a]][set[b]]);
                }
            }
            v
        };
        let all = pair_dists(&order);
        pcts.iter()
            .map(|&pct| {
                let k = ((n * pct) as f64 / 100.0).ceil() as usize;
                let k = k.clamp(2, n);
                let best = pair_dists(&order[..k]);
                [
                    div_or(mean(&best), mean(&all)),
                    div_or(median(&best), median(&all)),
                    mean(&best) - mean(&all),
                    median(&best) - median(&all),
                ]
            })
            .collect()
    }

    /// `[sd_ratio, mean_ratio, cor, coeff_var, fitness_cor]`.
    pub fn nbc(&self) -> [f64; 5] {
        let n = self.y.len();
        let order = self.ranking();
        let mut rank = vec![0; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let nn: Vec<f64> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| self.d[i][j]).fold(f64::INFINITY, f64::min))
            .collect();
        let mut nb = Vec::new();
        let mut nn_sub = Vec::new();
        let mut indeg = vec![0.0; n];
        for i in 0..n {
            if rank[i] == 0 {
                continue;
            }
            let mut best_j = usize::MAX;
            for j in 0..n {
                if rank[j] < rank[i] && (best_j == usize::MAX || self.d[i][j] < self.d[i][best_j]) {
                    best_j = j;
                }
            }
            indeg[best_j] += 1.0;
            nb.push(self.d[i][best_j]);
            nn_sub.push(nn[i]);
        }
        let q: Vec<f64> = nb.iter().zip(&nn_sub).filter(|(_, &a)| a > 0.0).map(|(b, a)| b / a).collect();
        let constant = self.y.iter().all(|&v| v == self.y[0]);
        [
            div_or(sd(&nn), sd(&nb)),
            div_or(mean(&nn), mean(&nb)),
            if constant { 0.0 } else { pearson(&nn_sub, &nb) },
            if q.len() < 2 { 0.0 } else { div_or(sd(&q), mean(&q)) },
            if constant { 0.0 } else { pearson(&self.y, &indeg) },
        ]
    }

    fn tour(&self) -> Vec<usize> {
        let n = self.y.len();
        let mut tour = vec![0];
        while tour.len() < n {
            let cur = *tour.last().unwrap();
            let next = (0..n)
                .filter(|j| !tour.contains(j))
                .min_by(|&a, &b| self.d[cur][a].total_cmp(&self.d[cur][b]).then(a.cmp(&b)))
                .unwrap();
            tour.push(next);
        }
        tour
    }

    /// `[h_max, eps_s, eps_max, eps_ratio, m0]` over the `{0} ∪ 10^[-5:0.25:15]` grid.
    pub fn ic(&self) -> [f64; 5] {
        let grid: Vec<f64> = std::iter::once(0.0).chain((0..=80).map(|k| 10f64.powf(-5.0 + 0.25 * k as f64))).collect();
        let tour = self.tour();
        let slopes: Vec<f64> = tour
            .windows(2)
            .filter(|w| self.d[w[0]][w[1]] > 0.0)
            .map(|w| (self.y[w[1]] - self.y[w[0]]) / self.d[w[0]][w[1]])
            .collect();
        let word = |eps: f64| -> Vec<char> {
            slopes.iter().map(|&s| if s > eps { '+' } else if s < -eps { '-' } else { '0' }).collect()
        };
        let h = |w: &[char]| -> f64 {
            let mut counts: HashMap<(char, char), usize> = HashMap::new();
            for p in w.windows(2) {
                *counts.entry((p[0], p[1])).or_default() += 1;
            }
            let m = (w.len() - 1) as f64;
            counts.iter().filter(|((a, b), _)| a != b).map(|(_, &c)| c as f64 / m).map(|p| -p * p.log(6.0)).sum()
        };
        let m = |w: &[char]| -> f64 {
            let mut s: Vec<char> = w.iter().copied().filter(|&c| c != '0').collect();
            s.dedup();
            s.len() as f64 / w.len() as f64
        };
        let hs: Vec<f64> = grid.iter().map(|&e| h(&word(e))).collect();
        let ms: Vec<f64> = grid.iter().map(|&e| m(&word(e))).collect();
        let lg = |e: f64| if e == 0.0 { -5.0 } else { e.log10() };
        let h_max = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let eps_max = grid[hs.iter().position(|&v| v == h_max).unwrap()];
        let eps_s = lg(grid[hs.iter().position(|&v| v < 0.05).unwrap()]);
        let m0 = ms[0];
        let eps_ratio = lg(grid[ms.iter().rposition(|&v| v >= 0.5 * m0).unwrap()]);
        [h_max, eps_s, eps_max, eps_ratio, m0]
    }
}

/// Twenty fixed points in `[-5, 5]^2` with a rugged, tie-free objective.
pub fn fixed_sample() -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
    };
    let x: Vec<Vec<f64>> = (0..20).map(|_| vec![next(), next()]).collect();
    let y = x
        .iter()
        .map(|p| p[0] * p[0] + 2.0 * p[1] * p[1] + 3.0 * (2.0 * p[0]).cos() + 0.5 * p[0] * p[1])
        .collect();
    (x, y)
}
