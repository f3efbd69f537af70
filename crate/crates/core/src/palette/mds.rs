//! Classical (Torgerson) multidimensional scaling with a cyclic Jacobi
//! eigensolver.

use crate::{Error, Result};

const JACOBI_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    /// Descending.
    pub values: Vec<f64>,
    /// Column `i` (stored contiguously at `vectors[i * n..]`) pairs with `values[i]`.
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[p * n + q] * a[p * n + q];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal norm drops below `1e-10`.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if matrix.len() != n * n {
        return Err(Error::Shape(format!("expected {n}x{n} matrix")));
    }
    let mut a = matrix.to_vec();
    // Row-major V; column j is an eigenvector.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut sweeps = 0;
    while off_diagonal_norm(&a, n) >= JACOBI_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            log::warn!("jacobi stopped after {JACOBI_MAX_SWEEPS} sweeps");
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in index order, so the result is deterministic.
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        vectors.extend((0..n).map(|k| v[k * n + j]));
    }
    Ok(SymmetricEigen { n, values, vectors })
}

/// Points embedded by classical MDS, row-major `n × dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub n: usize,
    pub dims: usize,
    pub coords: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Torgerson scaling: `B = -½ J D² J`, top `dims` eigenpairs, coordinates
/// `v·√λ`. Each column is sign-fixed so its largest-magnitude entry is
/// positive. Dimensions without a positive eigenvalue are zero-filled.
pub fn classical_mds(d: &[f64], n: usize, dims: usize) -> Result<Embedding> {
    if d.len() != n * n {
        return Err(Error::Shape(format!("distance matrix must be {n}x{n}")));
    }
    if dims == 0 || dims > n {
        return Err(Error::InvalidConfig(format!("cannot embed {n} points in {dims} dims")));
    }
    for i in 0..n {
        if d[i * n + i].abs() > 1e-12 {
            return Err(Error::InvalidConfig("distance matrix diagonal must be zero".into()));
        }
        for j in 0..i {
            if (d[i * n + j] - d[j * n + i]).abs() > 1e-12 {
                return Err(Error::InvalidConfig("distance matrix must be symmetric".into()));
            }
        }
    }

    let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
    let row_mean: Vec<f64> = (0..n)
        .map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }

    let eig = jacobi_eigen(&b, n)?;
    let mut coords = vec![0.0; n * dims];
    let mut missing = 0;
    for k in 0..dims {
        let lambda = eig.values[k];
        if lambda <= 0.0 {
            missing += 1;
            continue;
        }
        let vec = eig.vector(k);
        let mut pivot = 0;
        for (i, x) in vec.iter().enumerate() {
            if x.abs() > vec[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if vec[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * lambda.sqrt();
        for i in 0..n {
            coords[i * dims + k] = vec[i] * scale;
        }
    }
    if missing > 0 {
        log::warn!("MDS: {missing} of {dims} dimensions have no positive eigenvalue; zero-filled");
    }
    Ok(Embedding {
        n,
        dims,
        coords,
        eigenvalues: eig.values[..dims].to_vec(),
    })
}

/// Pearson correlation between input distances and embedded distances over
/// all unordered pairs.
pub fn distance_correlation(d: &[f64], emb: &Embedding) -> f64 {
    let n = emb.n;
    let mut xs = Vec::with_capacity(n * (n - 1) / 2);
    let mut ys = Vec::with_capacity(xs.capacity());
    for i in 0..n {
        for j in i + 1..n {
            xs.push(d[i * n + j]);
            ys.push(emb.distance(i, j));
        }
    }
    pearson(&xs, &ys)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
