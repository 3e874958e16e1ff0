/// A quadrature rule on the reference triangle (barycentric points, weights
/// summing to 1/2) or on the unit interval (weights summing to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
}

pub type TriangleRule = QuadratureRule<[f64; 3]>;
pub type EdgeRule = QuadratureRule<f64>;

/// 12-point symmetric rule, exact for polynomials of degree 6 (Dunavant).
pub fn triangle_rule() -> TriangleRule {
    // (weight normalized to unit area, orbit generator)
    const ORBITS_3: [(f64, f64, f64); 2] = [
        (0.116_786_275_726_379_37, 0.501_426_509_658_179_2, 0.249_286_745_170_910_4),
        (0.050_844_906_370_206_82, 0.873_821_971_016_995_5, 0.063_089_014_491_502_23),
    ];
    const ORBIT_6: (f64, [f64; 3]) = (
        0.082_851_075_618_373_58,
        [0.053_145_049_844_816_95, 0.310_352_451_033_784_4, 0.636_502_499_121_398_6],
    );
    let mut points = Vec::with_capacity(12);
    let mut weights = Vec::with_capacity(12);
    for (w, a, b) in ORBITS_3 {
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            points.push(p);
            weights.push(0.5 * w);
        }
    }
    let (w, [a, b, c]) = ORBIT_6;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(0.5 * w);
    }
    QuadratureRule { points, weights }
}

/// 4-point Gauss-Legendre rule on `[0, 1]`, exact to degree 7.
pub fn edge_rule() -> EdgeRule {
    let nodes = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    let w = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let mut points = Vec::with_capacity(4);
    let mut weights = Vec::with_capacity(4);
    for (x, wx) in nodes.iter().zip(w) {
        for s in [-1.0, 1.0] {
            points.push(0.5 * (1.0 + s * x));
            weights.push(0.5 * wx);
        }
    }
    QuadratureRule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_rule_exact_to_degree_six() {
        let rule = triangle_rule();
        assert_eq!(rule.points.len(), 12);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        for a in 0..=6u32 {
            for b in 0..=(6 - a) {
                for c in 0..=(6 - a - b) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    // reference triangle has 2 * area = 1
                    let exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
                    assert!((q - exact).abs() <= 1e-14, "monomial ({a},{b},{c}): {q} vs {exact}");
                }
            }
        }
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 0.5).abs() < 1e-15);
        // lambda0^2 lambda1^2 lambda2^2 integrates to 2!2!2!/8! = 1/5040
        let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * (p[0] * p[1] * p[2]).powi(2)).sum();
        assert!((q - 1.0 / 5040.0).abs() < 1e-16);
    }

    #[test]
    fn edge_rule_exact_to_degree_seven() {
        let rule = edge_rule();
        for k in 0..=7 {
            let q: f64 = rule.points.iter().zip(&rule.weights).map(|(t, w)| w * t.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "degree {k}");
        }
    }
}
