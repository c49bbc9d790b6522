//! Small fixed-size complex linear algebra (4x4 and 8x8) used throughout.

use num_complex::Complex64;

pub type C = Complex64;
pub type C4 = [C; 4];
pub type M4 = [[C; 4]; 4];
pub type M8 = [[C; 8]; 8];

pub const ZC: C = Complex64::new(0.0, 0.0);

pub fn c(re: f64, im: f64) -> C {
    Complex64::new(re, im)
}

pub fn zero4() -> M4 {
    [[ZC; 4]; 4]
}

pub fn eye4() -> M4 {
    let mut m = zero4();
    for i in 0..4 {
        m[i][i] = c(1.0, 0.0);
    }
    m
}

pub fn matmul4(a: &M4, b: &M4) -> M4 {
    let mut r = zero4();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == ZC {
                continue;
            }
            for j in 0..4 {
                r[i][j] += aik * b[k][j];
            }
        }
    }
    r
}

pub fn matvec4(a: &M4, x: &C4) -> C4 {
    let mut r = [ZC; 4];
    for i in 0..4 {
        for j in 0..4 {
            r[i] += a[i][j] * x[j];
        }
    }
    r
}

pub fn add4(a: &M4, b: &M4) -> M4 {
    let mut r = *a;
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] += b[i][j];
        }
    }
    r
}

pub fn sub4(a: &M4, b: &M4) -> M4 {
    let mut r = *a;
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] -= b[i][j];
        }
    }
    r
}

pub fn scale4(a: &M4, s: C) -> M4 {
    let mut r = *a;
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] *= s;
        }
    }
    r
}

pub fn adjoint4(a: &M4) -> M4 {
    let mut r = zero4();
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = a[j][i].conj();
        }
    }
    r
}

pub fn trace4(a: &M4) -> C {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

/// Max-entry modulus.
pub fn max_abs4(a: &M4) -> f64 {
    let mut m = 0.0f64;
    for row in a {
        for e in row {
            m = m.max(e.norm());
        }
    }
    m
}

pub fn vec_norm(x: &C4) -> f64 {
    x.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_sub(a: &C4, b: &C4) -> C4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn vec_add(a: &C4, b: &C4) -> C4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn vec_scale(a: &C4, s: C) -> C4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// `max |(U* U - I)_{ij}|`.
pub fn unitarity_defect(u: &M4) -> f64 {
    let d = sub4(&matmul4(&adjoint4(u), u), &eye4());
    max_abs4(&d)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse4(a: &M4) -> Option<M4> {
    let mut m = *a;
    let mut inv = eye4();
    for col in 0..4 {
        let mut piv = col;
        for row in col + 1..4 {
            if m[row][col].norm() > m[piv][col].norm() {
                piv = row;
            }
        }
        if m[piv][col].norm() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        for j in 0..4 {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for row in 0..4 {
            if row != col {
                let f = m[row][col];
                if f != ZC {
                    for j in 0..4 {
                        let mcj = m[col][j];
                        let icj = inv[col][j];
                        m[row][j] -= f * mcj;
                        inv[row][j] -= f * icj;
                    }
                }
            }
        }
    }
    Some(inv)
}

pub fn zero8() -> M8 {
    [[ZC; 8]; 8]
}

pub fn matmul8(a: &M8, b: &M8) -> M8 {
    let mut r = zero8();
    for i in 0..8 {
        for k in 0..8 {
            let aik = a[i][k];
            if aik == ZC {
                continue;
            }
            for j in 0..8 {
                r[i][j] += aik * b[k][j];
            }
        }
    }
    r
}

pub fn adjoint8(a: &M8) -> M8 {
    let mut r = zero8();
    for i in 0..8 {
        for j in 0..8 {
            r[i][j] = a[j][i].conj();
        }
    }
    r
}

pub fn max_abs8(a: &M8) -> f64 {
    let mut m = 0.0f64;
    for row in a {
        for e in row {
            m = m.max(e.norm());
        }
    }
    m
}

pub fn sub8(a: &M8, b: &M8) -> M8 {
    let mut r = *a;
    for i in 0..8 {
        for j in 0..8 {
            r[i][j] -= b[i][j];
        }
    }
    r
}

pub fn trace8(a: &M8) -> C {
    (0..8).map(|i| a[i][i]).sum()
}

/// Numerical rank by row echelon reduction with the given pivot tolerance.
pub fn rank8(a: &M8, tol: f64) -> usize {
    let mut m = *a;
    let mut rank = 0;
    for col in 0..8 {
        let mut piv = None;
        let mut best = tol;
        for row in rank..8 {
            if m[row][col].norm() > best {
                best = m[row][col].norm();
                piv = Some(row);
            }
        }
        let Some(p) = piv else { continue };
        m.swap(rank, p);
        let d = m[rank][col];
        for j in 0..8 {
            m[rank][j] /= d;
        }
        for row in 0..8 {
            if row != rank {
                let f = m[row][col];
                if f.norm() > 0.0 {
                    for j in 0..8 {
                        let v = m[rank][j];
                        m[row][j] -= f * v;
                    }
                }
            }
        }
        rank += 1;
        if rank == 8 {
            break;
        }
    }
    rank
}
