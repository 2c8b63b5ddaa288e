//! Small dense LU factorization with partial pivoting.

/// Row-major `n × n` factorization `P A = L U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub column: usize,
}

impl DenseLu {
    pub fn factor(mut a: Vec<f64>, n: usize, pivot_tol: f64) -> Result<Self, Singular> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut best, mut best_abs) = (k, a[k * n + k].abs());
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if best_abs <= pivot_tol {
                return Err(Singular { column: k });
            }
            if best != k {
                for j in 0..n {
                    a.swap(k * n + j, best * n + j);
                }
                perm.swap(k, best);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Ok(DenseLu { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solve `Aᵀ y = c`.
    pub fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = c.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s;
        }
        let mut y = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            y[i] = z[k];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matvec(a: &[f64], x: &[f64], n: usize, transpose: bool) -> Vec<f64> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if transpose { a[j * n + i] } else { a[i * n + j] } * x[j])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert_eq!(DenseLu::factor(a, 2, 1e-12).unwrap_err().column, 1);
    }

    #[test]
    fn needs_pivoting() {
        let a = vec![0.0, 1.0, 1.0, 0.0];
        let lu = DenseLu::factor(a, 2, 1e-12).unwrap();
        assert_eq!(lu.solve(&[3.0, 5.0]), vec![5.0, 3.0]);
    }

    proptest! {
        #[test]
        fn solves_random_systems(n in 1usize..8, seed in proptest::collection::vec(-1.0f64..1.0, 64 + 8)) {
            let mut a: Vec<f64> = seed[..n * n].to_vec();
            for i in 0..n {
                a[i * n + i] += 4.0;
            }
            let b = &seed[64..64 + n];
            let lu = DenseLu::factor(a.clone(), n, 1e-14).unwrap();
            let x = lu.solve(b);
            for (l, r) in matvec(&a, &x, n, false).iter().zip(b) {
                prop_assert!((l - r).abs() < 1e-12);
            }
            let y = lu.solve_transpose(b);
            for (l, r) in matvec(&a, &y, n, true).iter().zip(b) {
                prop_assert!((l - r).abs() < 1e-12);
            }
        }
    }
}
