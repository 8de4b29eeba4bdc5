//! Planar convex hulls of projected sample clouds. By the maximum principle a
//! polynomial that is small on the boundary of a hull is small on the whole hull,
//! so gates only need to be fitted on densified hull boundaries.

use num_complex::Complex64;

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Counter-clockwise hull vertices (Andrew's monotone chain).
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.iter().copied().filter(|z| z.re.is_finite() && z.im.is_finite()).collect();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Complex64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Complex64> = Vec::new();
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

/// `count` points spaced evenly along the hull boundary, pushed out from the
/// centroid by `inflate` (absolute distance) to cover sampling gaps.
pub fn densified_boundary(points: &[Complex64], count: usize, inflate: f64) -> Vec<Complex64> {
    let hull = convex_hull(points);
    if hull.is_empty() {
        return Vec::new();
    }
    let centroid = hull.iter().sum::<Complex64>() / hull.len() as f64;
    if hull.len() < 3 {
        // degenerate: a point or a segment, surround it by a small circle
        let r = inflate.max(1e-9);
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            let base = hull[k % hull.len()];
            out.push(base + Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / count as f64));
        }
        return out;
    }
    let m = hull.len();
    let lens: Vec<f64> = (0..m).map(|k| (hull[(k + 1) % m] - hull[k]).norm()).collect();
    let perimeter: f64 = lens.iter().sum();
    let mut out = Vec::with_capacity(count);
    let mut edge = 0usize;
    let mut walked = 0.0;
    for k in 0..count {
        let target = perimeter * k as f64 / count as f64;
        while edge + 1 < m && walked + lens[edge] < target {
            walked += lens[edge];
            edge += 1;
        }
        let t = if lens[edge] > 0.0 { ((target - walked) / lens[edge]).clamp(0.0, 1.0) } else { 0.0 };
        let p = hull[edge] + (hull[(edge + 1) % m] - hull[edge]) * t;
        let d = p - centroid;
        let nd = d.norm();
        out.push(if nd > 0.0 { p + d * (inflate / nd) } else { p });
    }
    out
}

/// `count` points on the circle of radius `radius` about `center`.
pub fn circle(center: Complex64, radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| center + Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull() {
        let pts = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.5),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        let b = densified_boundary(&pts, 40, 0.0);
        assert_eq!(b.len(), 40);
        for p in b {
            let on_edge = p.re.abs() < 1e-12 || (p.re - 1.0).abs() < 1e-12 || p.im.abs() < 1e-12 || (p.im - 1.0).abs() < 1e-12;
            assert!(on_edge);
        }
    }

    #[test]
    fn inflation_moves_outward() {
        let pts = circle(Complex64::new(2.0, 0.0), 0.5, 64);
        for p in densified_boundary(&pts, 32, 0.1) {
            assert!((p - Complex64::new(2.0, 0.0)).norm() > 0.55);
        }
    }
}
