//! Small helpers for integer vectors in `Z^d`.

/// `ℓ∞` norm.
#[inline]
pub fn linf(x: &[i64]) -> u64 {
    x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}

#[inline]
pub fn l1(x: &[i64]) -> u64 {
    x.iter().map(|c| c.unsigned_abs()).sum()
}

#[inline]
pub fn l2(x: &[i64]) -> f64 {
    x.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
}

#[inline]
pub fn dot(x: &[i64], y: &[i64]) -> i64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn unit(d: usize, i: usize) -> Vec<i64> {
    let mut e = vec![0; d];
    e[i] = 1;
    e
}

/// True when the first nonzero coordinate is positive, i.e. `x` is the
/// canonical representative of the pair `{x, -x}`.
#[inline]
pub fn is_positive_half(x: &[i64]) -> bool {
    x.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Odometer over the cube `[-r, r]^d` in lexicographic order.
#[derive(Debug, Clone)]
pub struct CubeIter {
    r: i64,
    cur: Vec<i64>,
    done: bool,
}

impl CubeIter {
    pub fn new(d: usize, r: u64) -> Self {
        let r = r as i64;
        CubeIter {
            r,
            cur: vec![-r; d],
            done: d == 0,
        }
    }
}

impl Iterator for CubeIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut i = self.cur.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.cur[i] < self.r {
                self.cur[i] += 1;
                break;
            }
            self.cur[i] = -self.r;
        }
        Some(out)
    }
}

/// Nonzero displacements of the cube `[-r, r]^d` with `x` in the positive
/// half, one per unordered pair `{x, -x}`.
pub fn half_cube(d: usize, r: u64) -> impl Iterator<Item = Vec<i64>> {
    CubeIter::new(d, r).filter(|x| is_positive_half(x))
}

/// Whether two integer vectors are linearly independent (some 2×2 minor is
/// nonzero).
pub fn linearly_independent(a: &[i64], b: &[i64]) -> bool {
    assert_eq!(a.len(), b.len());
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            if (a[i] as i128) * (b[j] as i128) != (a[j] as i128) * (b[i] as i128) {
                return true;
            }
        }
    }
    false
}

/// Applies the signed permutation `x ↦ (s_0 x_{π(0)}, …)`.
pub fn signed_permute(x: &[i64], perm: &[usize], signs: &[i64]) -> Vec<i64> {
    perm.iter().zip(signs).map(|(&p, &s)| s * x[p]).collect()
}
