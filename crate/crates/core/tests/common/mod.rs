//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the fast transform, the SC tree or the prefix tables.
#![allow(dead_code)]

use polarcomm::sc::{Pair, SymbolChannel};

/// Rows of `G_N = B_N F^{(x)n}` built explicitly.
pub fn generator_matrix(n: usize) -> Vec<Vec<u8>> {
    let mut g = vec![vec![1u8]];
    while g.len() < n {
        let m = g.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for r in 0..m {
            for c in 0..m {
                // F = [[1, 0], [1, 1]]
                next[r][c] = g[r][c];
                next[m + r][c] = g[r][c];
                next[m + r][m + c] = g[r][c];
            }
        }
        g = next;
    }
    let bits = n.trailing_zeros();
    let rev = |i: usize| (0..bits).fold(0, |acc, b| acc | (((i >> b) & 1) << (bits - 1 - b)));
    (0..n).map(|r| g[rev(r)].clone()).collect()
}

/// `u G` over GF(2).
pub fn encode(g: &[Vec<u8>], u: &[u8]) -> Vec<u8> {
    let n = u.len();
    let mut v = vec![0u8; n];
    for (r, &ur) in u.iter().enumerate() {
        if ur == 1 {
            for c in 0..n {
                v[c] ^= g[r][c];
            }
        }
    }
    v
}

pub fn bits_of(x: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((x >> (n - 1 - i)) & 1) as u8).collect()
}

/// `u -> u G` for every `u`, indexed by the MSB-first integer of `u`.
pub fn encode_table(n: usize) -> Vec<Vec<u8>> {
    let g = generator_matrix(n);
    (0..1usize << n).map(|x| encode(&g, &bits_of(x, n))).collect()
}

/// Every `(v, P(v, obs))` for a fixed observation block.
pub fn v_law(ch: &SymbolChannel, obs: &[usize]) -> Vec<(Vec<u8>, f64)> {
    v_law_with(&encode_table(obs.len()), ch, obs)
}

pub fn v_law_with(table: &[Vec<u8>], ch: &SymbolChannel, obs: &[usize]) -> Vec<(Vec<u8>, f64)> {
    let n = obs.len();
    (0..1usize << n)
        .map(|x| {
            let w: f64 = (0..n).map(|j| ch.pair(obs[j])[(x >> (n - 1 - j)) & 1]).product();
            (table[x].clone(), w)
        })
        .collect()
}

/// `pairs[i][prefix]` = unnormalized `P(V_1..V_i = prefix, V_{i+1} = ., obs)`,
/// prefixes as MSB-first integers.
pub fn prefix_pairs(law: &[(Vec<u8>, f64)], n: usize) -> Vec<Vec<Pair>> {
    let mut out: Vec<Vec<Pair>> = (0..n).map(|i| vec![[0.0; 2]; 1 << i]).collect();
    for (v, w) in law {
        let mut prefix = 0;
        for i in 0..n {
            out[i][prefix][v[i] as usize] += w;
            prefix = 2 * prefix + v[i] as usize;
        }
    }
    out
}

/// Every observation block of length `n` with its probability.
pub fn obs_blocks(ch: &SymbolChannel, n: usize) -> Vec<(Vec<usize>, f64)> {
    let k = ch.obs_size();
    let marg: Vec<f64> = (0..k).map(|o| ch.pair(o)[0] + ch.pair(o)[1]).collect();
    (0..k.pow(n as u32))
        .map(|mut x| {
            let mut obs = vec![0; n];
            for o in obs.iter_mut() {
                *o = x % k;
                x /= k;
            }
            let p = obs.iter().map(|&o| marg[o]).product();
            (obs, p)
        })
        .collect()
}

/// `Z(V_i | V_1..V_{i-1}, O)` for every `i` by full enumeration.
pub fn brute_z(ch: &SymbolChannel, n: usize) -> Vec<f64> {
    let table = encode_table(n);
    let mut z = vec![0.0; n];
    for (obs, _) in obs_blocks(ch, n) {
        let pairs = prefix_pairs(&v_law_with(&table, ch, &obs), n);
        for (zi, level) in z.iter_mut().zip(&pairs) {
            *zi += level.iter().map(|p| 2.0 * (p[0] * p[1]).sqrt()).sum::<f64>();
        }
    }
    z
}
