use std::cmp::Ordering;

use crate::kpi::Objectives;

/// `x` dominates `y`: strictly more throughput, no lower fairness and no
/// higher drop rate.
pub fn dominates(x: &Objectives, y: &Objectives) -> bool {
    x.thp > y.thp && x.jfi >= y.jfi && x.pdr <= y.pdr
}

/// Nondomination levels; `fronts[0]` is the nondominated set. Indices inside a
/// front are ascending.
pub fn fast_nondominated_sort(objs: &[Objectives]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for p in 0..n {
        for q in 0..n {
            if dominates(&objs[p], &objs[q]) {
                dominated_by[p].push(q);
            } else if dominates(&objs[q], &objs[p]) {
                count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Rank (front index) of every individual.
pub fn ranks(fronts: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut r = vec![usize::MAX; n];
    for (i, f) in fronts.iter().enumerate() {
        for &p in f {
            r[p] = i;
        }
    }
    r
}

fn same(a: &Objectives, b: &Objectives) -> bool {
    a.thp == b.thp && a.jfi == b.jfi && a.pdr == b.pdr
}

/// Crowding distance of each member of `front` (same order).
///
/// Identical objective triples are collapsed first: the earliest copy takes
/// part in the computation and later copies get 0. With at most two distinct
/// points every distinct point is a boundary (infinite). Per objective the
/// extremes are infinite and interior points add the normalized gap between
/// their neighbors; an objective that is constant on the front adds nothing.
pub fn crowding_distance(objs: &[Objectives], front: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; front.len()];
    let mut reps: Vec<usize> = Vec::new();
    for (i, &p) in front.iter().enumerate() {
        if !reps.iter().any(|&r| same(&objs[front[r]], &objs[p])) {
            reps.push(i);
        }
    }
    if reps.len() <= 2 {
        for &r in &reps {
            dist[r] = f64::INFINITY;
        }
        return dist;
    }
    let getters: [fn(&Objectives) -> f64; 3] = [|o| o.thp as f64, |o| o.jfi, |o| o.pdr];
    for get in getters {
        let mut order = reps.clone();
        order.sort_by(|&a, &b| {
            get(&objs[front[a]])
                .partial_cmp(&get(&objs[front[b]]))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let lo = get(&objs[front[order[0]]]);
        let hi = get(&objs[front[*order.last().expect("nonempty")]]);
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[*order.last().expect("nonempty")] = f64::INFINITY;
        for w in order.windows(3) {
            let gap = get(&objs[front[w[2]]]) - get(&objs[front[w[0]]]);
            dist[w[1]] += gap / range;
        }
    }
    dist
}

/// Crowded-comparison order: lower rank, then larger crowding distance,
/// then lower index.
pub fn crowded_cmp(a: (usize, f64, usize), b: (usize, f64, usize)) -> Ordering {
    a.0.cmp(&b.0)
        .then(b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal))
        .then(a.2.cmp(&b.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(thp: u64, jfi: f64, pdr: f64) -> Objectives {
        Objectives { thp, jfi, pdr }
    }

    #[test]
    fn domination_examples() {
        assert!(dominates(&o(10, 0.9, 0.1), &o(9, 0.9, 0.1)));
        assert!(!dominates(&o(10, 0.8, 0.1), &o(9, 0.9, 0.1)));
        let x = o(10, 0.9, 0.1);
        assert!(!dominates(&x, &x));
    }

    #[test]
    fn sort_examples() {
        let all = vec![o(3, 0.1, 0.0), o(2, 0.5, 0.0), o(1, 0.9, 0.0)];
        assert_eq!(fast_nondominated_sort(&all), vec![vec![0, 1, 2]]);
        let chain = vec![o(1, 0.1, 0.3), o(3, 0.3, 0.1), o(2, 0.2, 0.2)];
        assert_eq!(fast_nondominated_sort(&chain), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn crowding_examples() {
        let two = vec![o(1, 0.1, 0.1), o(2, 0.2, 0.2)];
        assert!(crowding_distance(&two, &[0, 1]).iter().all(|d| d.is_infinite()));
        let line = vec![o(0, 0.0, 0.5), o(5, 0.5, 0.5), o(10, 1.0, 0.5)];
        let d = crowding_distance(&line, &[0, 1, 2]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-12);
        let dup = vec![o(0, 0.0, 0.0), o(5, 0.5, 0.5), o(5, 0.5, 0.5), o(10, 1.0, 1.0)];
        let d = crowding_distance(&dup, &[0, 1, 2, 3]);
        assert!(d[1] > 0.0 && d[1].is_finite());
        assert_eq!(d[2], 0.0);
    }
}
