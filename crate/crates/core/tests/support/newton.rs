//! Full Newton-Raphson AC power flow in polar form, used only as a test
//! reference. Independent of the sweep solver: it assembles the bus
//! admittance matrix, iterates on the polar mismatch equations, and solves
//! the Jacobian system with dense Gaussian elimination.

use num_complex::Complex64;
use voltfair_core::grid::NetworkSpec;
use voltfair_core::power_flow::Injections;

pub struct NewtonSolution {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    pub converged: bool,
}

pub fn solve_newton(spec: &NetworkSpec, inj: &Injections) -> NewtonSolution {
    let n = spec.n_buses();
    let index = spec.bus_index();
    let slack = index[&spec.slack_bus];
    let z_base = spec.z_base_ohm();

    let mut ybus = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for l in &spec.lines {
        let a = index[&l.from];
        let b = index[&l.to];
        let y = 1.0
            / Complex64::new(
                l.resistance_ohm / z_base,
                l.reactance_ohm / z_base,
            );
        ybus[a][a] += y;
        ybus[b][b] += y;
        ybus[a][b] -= y;
        ybus[b][a] -= y;
    }

    let pq: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = pq.len();
    let mut v = vec![1.0f64; n];
    let mut th = vec![0.0f64; n];
    let mut converged = false;

    for _ in 0..50 {
        // Injected powers at the current iterate.
        let mut p_calc = vec![0.0; n];
        let mut q_calc = vec![0.0; n];
        for i in 0..n {
            for k in 0..n {
                let g = ybus[i][k].re;
                let b = ybus[i][k].im;
                let d = th[i] - th[k];
                p_calc[i] += v[i] * v[k] * (g * d.cos() + b * d.sin());
                q_calc[i] += v[i] * v[k] * (g * d.sin() - b * d.cos());
            }
        }

        let mut mismatch = vec![0.0; 2 * m];
        for (r, &i) in pq.iter().enumerate() {
            mismatch[r] = p_calc[i] - inj.p[i];
            mismatch[m + r] = q_calc[i] - inj.q[i];
        }
        if mismatch.iter().all(|x| x.abs() < 1e-10) {
            converged = true;
            break;
        }

        // Jacobian in the standard polar partial-derivative form.
        let mut jac = vec![vec![0.0; 2 * m]; 2 * m];
        for (r, &i) in pq.iter().enumerate() {
            for (c, &j) in pq.iter().enumerate() {
                let g = ybus[i][j].re;
                let b = ybus[i][j].im;
                if i == j {
                    jac[r][c] = -q_calc[i] - b * v[i] * v[i];
                    jac[r][m + c] = p_calc[i] / v[i] + g * v[i];
                    jac[m + r][c] = p_calc[i] - g * v[i] * v[i];
                    jac[m + r][m + c] = q_calc[i] / v[i] - b * v[i] * v[i];
                } else {
                    let d = th[i] - th[j];
                    jac[r][c] = v[i] * v[j] * (g * d.sin() - b * d.cos());
                    jac[r][m + c] = v[i] * (g * d.cos() + b * d.sin());
                    jac[m + r][c] = -v[i] * v[j] * (g * d.cos() + b * d.sin());
                    jac[m + r][m + c] = v[i] * (g * d.sin() - b * d.cos());
                }
            }
        }

        let rhs: Vec<f64> = mismatch.iter().map(|x| -x).collect();
        let Some(dx) = gauss_solve(jac, rhs) else {
            break;
        };
        for (r, &i) in pq.iter().enumerate() {
            th[i] += dx[r];
            v[i] += dx[m + r];
        }
    }

    NewtonSolution {
        v_mag: v,
        v_ang: th,
        converged,
    }
}

/// Dense Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
