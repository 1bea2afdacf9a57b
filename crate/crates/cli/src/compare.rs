//! Covariance comparison: entrywise difference plus a search over the
//! small signed-permutation group for basis-equivalence.

use nalgebra::DMatrix;

/// Looks for a permutation `p` and signs `eps` with
/// `b[i][j] = eps_i eps_j a[p(i)][p(j)]` for all entries, within `tol`.
/// The group is tiny (g <= 6 in practice), so exhaustive search is fine.
/// The global sign is irrelevant, so `eps[0]` is pinned to +1.
pub fn signed_permutation_match(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    tol: f64,
) -> Option<(Vec<usize>, Vec<i8>)> {
    let g = a.nrows();
    if g != b.nrows() || g > 6 {
        return None;
    }
    let mut perm: Vec<usize> = (0..g).collect();
    loop {
        for mask in 0..(1u32 << g.saturating_sub(1)) {
            let eps: Vec<i8> = (0..g)
                .map(|i| {
                    if i > 0 && (mask >> (i - 1)) & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            let ok = (0..g).all(|i| {
                (0..g).all(|j| {
                    let want = f64::from(eps[i]) * f64::from(eps[j]) * a[(perm[i], perm[j])];
                    (b[(i, j)] - want).abs() <= tol
                })
            });
            if ok {
                return Some((perm, eps));
            }
        }
        if !next_permutation(&mut perm) {
            return None;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_identity_and_sign_flips() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]);
        let (p, e) = signed_permutation_match(&a, &a, 1e-12).unwrap();
        assert_eq!(p, vec![0, 1]);
        assert_eq!(e, vec![1, 1]);
        // Conjugate by diag(1,-1).
        let b = DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 3.0]);
        let (p, e) = signed_permutation_match(&a, &b, 1e-12).unwrap();
        assert_eq!(p, vec![0, 1]);
        assert_eq!(e, vec![1, -1]);
    }

    #[test]
    fn finds_permutation() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]);
        let (p, _) = signed_permutation_match(&a, &b, 1e-12).unwrap();
        assert_eq!(p, vec![1, 0]);
    }

    #[test]
    fn rejects_unrelated() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!(signed_permutation_match(&a, &b, 1e-12).is_none());
    }
}
