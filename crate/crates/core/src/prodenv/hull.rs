use std::collections::BTreeSet;

/// Area of the convex hull of planar points (monotone chain + shoelace).
pub fn hull_area_2d(points: &[(f64, f64)]) -> f64 {
    let hull = hull_2d(points);
    if hull.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..hull.len())
        .map(|i| {
            let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
            p.0 * q.1 - q.0 * p.1
        })
        .sum();
    0.5 * twice.abs()
}

/// Counter-clockwise hull vertices, collinear points dropped.
pub fn hull_2d(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

/// Volume of the convex hull of spatial points (incremental hull).
/// Degenerate (flat or collinear) inputs give zero.
pub fn hull_volume_3d(points: &[P3]) -> f64 {
    let mut pts: Vec<P3> = points.iter().copied().filter(|p| p.iter().all(|v| v.is_finite())).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2])));
    pts.dedup();
    if pts.len() < 4 {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale = norm(sub(hi, lo));
    if scale == 0.0 {
        return 0.0;
    }
    let eps = 1e-12 * scale;

    let i0 = 0;
    let i1 = farthest(&pts, |p| norm(sub(p, pts[i0])));
    if norm(sub(pts[i1], pts[i0])) <= eps {
        return 0.0;
    }
    let dir = sub(pts[i1], pts[i0]);
    let i2 = farthest(&pts, |p| norm(cross(dir, sub(p, pts[i0]))) / norm(dir));
    let n = cross(dir, sub(pts[i2], pts[i0]));
    if norm(n) / norm(dir) <= eps {
        return 0.0;
    }
    let i3 = farthest(&pts, |p| dot(n, sub(p, pts[i0])).abs() / norm(n));
    if dot(n, sub(pts[i3], pts[i0])).abs() / norm(n) <= eps {
        return 0.0;
    }
    let seed = [i0, i1, i2, i3];
    let mut center = [0.0; 3];
    for &i in &seed {
        for k in 0..3 {
            center[k] += 0.25 * pts[i][k];
        }
    }

    let mut faces: Vec<[usize; 3]> = Vec::new();
    for skip in 0..4 {
        let f: Vec<usize> = seed.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &i)| i).collect();
        let mut face = [f[0], f[1], f[2]];
        if signed_distance(&pts, face, center) > 0.0 {
            face.swap(1, 2);
        }
        faces.push(face);
    }
    let mut alive = vec![true; faces.len()];

    for (idx, &p) in pts.iter().enumerate() {
        if seed.contains(&idx) {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| alive[f] && signed_distance(&pts, faces[f], p) > eps)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut edges = BTreeSet::new();
        for &f in &visible {
            let [a, b, c] = faces[f];
            edges.extend([(a, b), (b, c), (c, a)]);
            alive[f] = false;
        }
        for &(a, b) in &edges {
            if !edges.contains(&(b, a)) {
                faces.push([a, b, idx]);
                alive.push(true);
            }
        }
    }

    let volume: f64 = faces
        .iter()
        .zip(&alive)
        .filter(|(_, &on)| on)
        .map(|(&[a, b, c], _)| dot(sub(pts[a], center), cross(sub(pts[b], center), sub(pts[c], center))))
        .sum();
    volume.abs() / 6.0
}

fn farthest(pts: &[P3], key: impl Fn(P3) -> f64) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &p) in pts.iter().enumerate() {
        let k = key(p);
        if k > best.1 {
            best = (i, k);
        }
    }
    best.0
}

fn signed_distance(pts: &[P3], [a, b, c]: [usize; 3], p: P3) -> f64 {
    let n = cross(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
    dot(n, sub(p, pts[a])) / norm(n)
}
