//! Laplacian spectra of small undirected graphs.
//!
//! The graphs handled here are distribution-network sized (tens of nodes),
//! so a dense cyclic Jacobi sweep is both simple and accurate to machine
//! precision. Graphs are given as a vertex count and a list of index pairs;
//! duplicate pairs collapse into a single unweighted edge and self-loops are
//! ignored.

/// Dense row-major unweighted Laplacian `L = D - A`.
pub fn laplacian(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let mut adj = vec![false; n * n];
    for &(a, b) in edges {
        if a != b && a < n && b < n {
            adj[a * n + b] = true;
            adj[b * n + a] = true;
        }
    }
    let mut lap = vec![0.0; n * n];
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            if adj[i * n + j] {
                lap[i * n + j] = -1.0;
                degree += 1.0;
            }
        }
        lap[i * n + i] = degree;
    }
    lap
}

/// Returns true when every vertex is reachable from vertex 0.
pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a < n && b < n && a != b {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

/// Eigenvalues of a real symmetric matrix, ascending.
///
/// Cyclic Jacobi rotations; the input is consumed as scratch space.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    const MAX_SWEEPS: usize = 100;

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return vec![0.0; n];
    }
    let tol = f64::EPSILON * frob * 1e-2;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
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
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Second-smallest Laplacian eigenvalue (algebraic connectivity).
///
/// Exactly 0 for graphs with fewer than two vertices or more than one
/// connected component.
pub fn algebraic_connectivity(n: usize, edges: &[(usize, usize)]) -> f64 {
    if n < 2 || !is_connected(n, edges) {
        return 0.0;
    }
    let eig = symmetric_eigenvalues(laplacian(n, edges), n);
    eig[1].max(0.0)
}
