//! Brute-force enumeration of momentum shells and resonant sets. Cost grows
//! as `|box|^{2n}` per target, so these serve as correctness oracles.

use super::SignedTuple;
use crate::spectral::Lattice;

/// Calls `visit(tuple, divisor)` for every in-box tuple of `S(k, n)`, in
/// lexicographic order of mode indexes. The divisor is
/// `-lambda_k + sum_j (-1)^{j-1} lambda_{k_j}`.
pub fn for_each_shell_tuple(
    lattice: &Lattice,
    target: usize,
    n: usize,
    mut visit: impl FnMut(&[u32], i64),
) {
    let len = 2 * n + 1;
    let dim = lattice.dim();
    let modes = lattice.len();
    let lambda = lattice.lambda();
    let k = lattice.mode(target);
    let mut idx = vec![0u32; len];
    let mut last = vec![0i32; dim];
    // odometer over the first 2n positions; the last one is forced by momentum
    loop {
        for (axis, slot) in last.iter_mut().enumerate() {
            let mut acc = k[axis];
            for (j, &m) in idx[..len - 1].iter().enumerate() {
                let c = lattice.mode(m as usize)[axis];
                if j % 2 == 0 {
                    acc -= c;
                } else {
                    acc += c;
                }
            }
            *slot = acc;
        }
        if let Some(li) = lattice.index_of(&last) {
            idx[len - 1] = li as u32;
            let freq: i64 = idx
                .iter()
                .enumerate()
                .map(|(j, &m)| {
                    let l = lambda[m as usize];
                    if j % 2 == 0 {
                        l
                    } else {
                        -l
                    }
                })
                .sum();
            visit(&idx, freq - lambda[target]);
        }
        let mut pos = len - 1;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if (idx[pos] as usize) < modes {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// All in-box tuples with `sum_j (-1)^{j-1} k_j = k`.
pub fn enumerate_s_naive(lattice: &Lattice, target: usize, n: usize) -> Vec<SignedTuple> {
    let mut out = Vec::new();
    for_each_shell_tuple(lattice, target, n, |t, _| out.push(SignedTuple(t.to_vec())));
    out
}

/// The subset of [`enumerate_s_naive`] whose divisor vanishes.
pub fn enumerate_r_naive(lattice: &Lattice, target: usize, n: usize) -> Vec<SignedTuple> {
    let mut out = Vec::new();
    for_each_shell_tuple(lattice, target, n, |t, div| {
        if div == 0 {
            out.push(SignedTuple(t.to_vec()));
        }
    });
    out
}

/// Divisor statistics by exhaustive scan over every target.
pub fn divisor_statistics_naive(lattice: &Lattice, n: usize) -> super::DivisorStats {
    let mut gap: Option<u64> = None;
    let mut max_freq = 0u64;
    for target in 0..lattice.len() {
        for_each_shell_tuple(lattice, target, n, |_, div| {
            let a = div.unsigned_abs();
            max_freq = max_freq.max(a);
            if a != 0 {
                gap = Some(gap.map_or(a, |g| g.min(a)));
            }
        });
    }
    super::DivisorStats { gap, max_freq }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(lattice: &Lattice, t: &SignedTuple) -> Vec<i32> {
        t.0.iter().map(|&i| lattice.mode(i as usize)[0]).collect()
    }

    #[test]
    fn shell_count_1d_unit_box() {
        let lat = Lattice::new(1, 1).unwrap();
        let zero = lat.index_of(&[0]).unwrap();
        // hand count: of the 27 triples, those with k1 - k2 + k3 = 0
        let mut brute = 0;
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    if a - b + c == 0 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 7);
        assert_eq!(enumerate_s_naive(&lat, zero, 1).len(), 7);
    }

    #[test]
    fn single_mode_lattice() {
        let lat = Lattice::new(1, 0).unwrap();
        assert_eq!(enumerate_s_naive(&lat, 0, 1), vec![SignedTuple(vec![0, 0, 0])]);
        assert_eq!(enumerate_r_naive(&lat, 0, 2).len(), 1);
    }

    #[test]
    fn resonant_tuples_1d_unit_box() {
        let lat = Lattice::new(1, 1).unwrap();
        let zero = lat.index_of(&[0]).unwrap();
        let got: Vec<Vec<i32>> = enumerate_r_naive(&lat, zero, 1)
            .iter()
            .map(|t| coords(&lat, t))
            .collect();
        let mut expected = vec![
            vec![0, 0, 0],
            vec![1, 1, 0],
            vec![0, 1, 1],
            vec![-1, -1, 0],
            vec![0, -1, -1],
        ];
        expected.sort();
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, expected);
        let one = lat.index_of(&[1]).unwrap();
        assert_eq!(enumerate_r_naive(&lat, one, 1).len(), 5);
    }

    #[test]
    fn diagonal_tuple_always_present() {
        let lat = Lattice::new(2, 1).unwrap();
        for n in 1..=2 {
            for k in 0..lat.len() {
                let diag = SignedTuple(vec![k as u32; 2 * n + 1]);
                assert!(enumerate_s_naive(&lat, k, n).contains(&diag));
                assert!(enumerate_r_naive(&lat, k, n).contains(&diag));
            }
        }
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let lat = Lattice::new(2, 1).unwrap();
        let s = enumerate_s_naive(&lat, 3, 1);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
