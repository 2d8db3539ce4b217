//! Mean of ln|r - r'| over two axis-aligned rectangles.

/// Fourth antiderivative of ln sqrt(x² + y²) in x and y (even in both).
fn primitive(x: f64, y: f64) -> f64 {
    let (x, y) = (x.abs(), y.abs());
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let (x2, y2) = (x * x, y * y);
    let mut t = (x2 * y2 / 4.0 - x2 * x2 / 24.0 - y2 * y2 / 24.0) * r2.ln();
    if x > 0.0 && y > 0.0 {
        t += x2 * x * y * (y / x).atan() / 3.0 + x * y2 * y * (x / y).atan() / 3.0;
    }
    t -= 25.0 / 48.0 * x2 * y2;
    t / 2.0 - 25.0 * x2 * y2 / 96.0
}

/// Mean of ln|r - r'| for r uniform on rectangle 1 (centre `c1`, sides
/// `s1`) and r' uniform on rectangle 2.  Both rectangles share the axes.
///
/// The corner sum cancels heavily once the separation dwarfs the sides, so
/// callers use the centre distance for far pairs.
pub fn mean_log_distance(c1: (f64, f64), s1: (f64, f64), c2: (f64, f64), s2: (f64, f64)) -> f64 {
    let (dx, dy) = (c1.0 - c2.0, c1.1 - c2.1);
    let corners = |d: f64, a: f64, b: f64| {
        [
            (d + (a + b) / 2.0, 1.0),
            (d - (a - b) / 2.0, -1.0),
            (d + (a - b) / 2.0, -1.0),
            (d - (a + b) / 2.0, 1.0),
        ]
    };
    let px = corners(dx, s1.0, s2.0);
    let py = corners(dy, s1.1, s2.1);
    let mut sum = 0.0;
    for &(u, su) in &px {
        for &(v, sv) in &py {
            sum += su * sv * primitive(u, v);
        }
    }
    sum / (s1.0 * s1.1 * s2.0 * s2.1)
}
