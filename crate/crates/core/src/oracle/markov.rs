use crate::envs::{EnvKind, FourStatesEnv, S_R};
use crate::error::{Error, Result};

/// Stationary distribution of a finite chain given as a row-stochastic
/// matrix, by Gaussian elimination on `π(P - I) = 0`, `Σπ = 1`.
///
/// Assumes a single recurrent class.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    if n == 0 {
        return Err(Error::Domain("empty transition matrix".into()));
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Shape {
                what: "transition row",
                expected: n,
                got: row.len(),
            });
        }
        if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("row {i} does not sum to 1")));
        }
    }
    // a[i][j] = (P^T - I)[i][j]; last row replaced by normalisation
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-13 {
            return Err(Error::Domain("chain has more than one recurrent class".into()));
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// One agent's position chain under the uniform random policy.
pub fn uniform_position_chain(kind: EnvKind, slip: f64) -> Result<Vec<Vec<f64>>> {
    match kind {
        EnvKind::TwoStates => Ok(vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
        EnvKind::FourStates => {
            let mut p = vec![vec![0.0; 4]; 4];
            for row in p.iter_mut() {
                for target in 0..4u8 {
                    let land = FourStatesEnv::landing_distribution(slip, target);
                    for (l, q) in land.iter().enumerate() {
                        row[l] += 0.25 * q;
                    }
                }
            }
            Ok(p)
        }
        EnvKind::Ipd => Err(Error::Config("the prisoner's dilemma has no position chain".into())),
    }
}

/// Stationary probability that one uniformly acting agent is *not* on the
/// reward state.
pub fn occupancy_zeta(kind: EnvKind, slip: f64) -> Result<f64> {
    let pi = stationary_distribution(&uniform_position_chain(kind, slip)?)?;
    Ok(1.0 - pi[S_R as usize])
}
