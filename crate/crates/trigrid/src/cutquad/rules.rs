//! Quadrature rule tables: 1D Gauss on [0,1], symmetric tetrahedron rules,
//! and triangle rules in barycentric coordinates.

/// Gauss points and weights on [0, 1]; weights sum to 1.
pub fn gauss_1d(points: usize) -> &'static [(f64, f64)] {
    const P1: [(f64, f64); 1] = [(0.5, 1.0)];
    const P2: [(f64, f64); 2] = [
        (0.5 - 0.288675134594812882, 0.5), // 0.5 +- 0.5/sqrt(3)
        (0.5 + 0.288675134594812882, 0.5),
    ];
    const P3: [(f64, f64); 3] = [
        (0.5 - 0.387298334620741688, 5.0 / 18.0), // 0.5 +- 0.5*sqrt(3/5)
        (0.5, 4.0 / 9.0),
        (0.5 + 0.387298334620741688, 5.0 / 18.0),
    ];
    const P4: [(f64, f64); 4] = [
        (0.5 - 0.430568155797026288, 0.173927422568726929),
        (0.5 - 0.169990521792428132, 0.326072577431273071),
        (0.5 + 0.169990521792428132, 0.326072577431273071),
        (0.5 + 0.430568155797026288, 0.173927422568726929),
    ];
    const P5: [(f64, f64); 5] = [
        (0.5 - 0.453089922969331996, 0.118463442528094544),
        (0.5 - 0.269234655052841555, 0.239314335249683234),
        (0.5, 0.284444444444444444),
        (0.5 + 0.269234655052841555, 0.239314335249683234),
        (0.5 + 0.453089922969331996, 0.118463442528094544),
    ];
    match points {
        1 => &P1,
        2 => &P2,
        3 => &P3,
        4 => &P4,
        5 => &P5,
        _ => panic!("unsupported Gauss point count {points}"),
    }
}

/// Tetrahedron rule of the requested polynomial degree, as barycentric
/// quadruples with weights summing to 1 (scale by the tet volume).
pub fn tet_rule(degree: usize) -> &'static [([f64; 4], f64)] {
    // 4-point degree-2 rule.
    const A: f64 = 0.585410196624968454; // (5 + 3 sqrt(5)) / 20
    const B: f64 = 0.138196601125010515; // (5 - sqrt(5)) / 20
    const DEG2: [([f64; 4], f64); 4] = [
        ([A, B, B, B], 0.25),
        ([B, A, B, B], 0.25),
        ([B, B, A, B], 0.25),
        ([B, B, B, A], 0.25),
    ];
    // 11-point degree-4 rule (Keast), weights rescaled to sum to 1.
    const C: f64 = 11.0 / 14.0;
    const D: f64 = 1.0 / 14.0;
    const E: f64 = 0.399403576166799219; // (1 + sqrt(5/14)) / 4
    const F: f64 = 0.100596423833200785; // (1 - sqrt(5/14)) / 4
    const W0: f64 = -444.0 / 5625.0;
    const W1: f64 = 343.0 / 7500.0;
    const W2: f64 = 56.0 / 375.0;
    const DEG4: [([f64; 4], f64); 11] = [
        ([0.25, 0.25, 0.25, 0.25], W0),
        ([C, D, D, D], W1),
        ([D, C, D, D], W1),
        ([D, D, C, D], W1),
        ([D, D, D, C], W1),
        ([E, E, F, F], W2),
        ([E, F, E, F], W2),
        ([E, F, F, E], W2),
        ([F, E, E, F], W2),
        ([F, E, F, E], W2),
        ([F, F, E, E], W2),
    ];
    // 24-point degree-6 rule (Keast), weights rescaled to sum to 1.
    const A6: f64 = 0.356191386222544953;
    const B6: f64 = 0.214602871259152029;
    const C6: f64 = 0.877978124396165982;
    const D6: f64 = 0.040673958534611353;
    const E6: f64 = 0.032986329573173468;
    const F6: f64 = 0.322337890142275510;
    const G6: f64 = 0.603005664791649076;
    const H6: f64 = 0.269672331458315867;
    const I6: f64 = 0.063661001875017525;
    const V1: f64 = 0.039922750257869636;
    const V2: f64 = 0.010077211055345822;
    const V3: f64 = 0.055357181543927398;
    const V4: f64 = 0.048214285714285710;
    const DEG6: [([f64; 4], f64); 24] = [
        ([A6, B6, B6, B6], V1),
        ([B6, A6, B6, B6], V1),
        ([B6, B6, A6, B6], V1),
        ([B6, B6, B6, A6], V1),
        ([C6, D6, D6, D6], V2),
        ([D6, C6, D6, D6], V2),
        ([D6, D6, C6, D6], V2),
        ([D6, D6, D6, C6], V2),
        ([E6, F6, F6, F6], V3),
        ([F6, E6, F6, F6], V3),
        ([F6, F6, E6, F6], V3),
        ([F6, F6, F6, E6], V3),
        ([G6, H6, I6, I6], V4),
        ([G6, I6, H6, I6], V4),
        ([G6, I6, I6, H6], V4),
        ([H6, G6, I6, I6], V4),
        ([I6, G6, H6, I6], V4),
        ([I6, G6, I6, H6], V4),
        ([H6, I6, G6, I6], V4),
        ([I6, H6, G6, I6], V4),
        ([I6, I6, G6, H6], V4),
        ([H6, I6, I6, G6], V4),
        ([I6, H6, I6, G6], V4),
        ([I6, I6, H6, G6], V4),
    ];
    match degree {
        0..=2 => &DEG2,
        3 | 4 => &DEG4,
        5 | 6 => &DEG6,
        _ => panic!("unsupported tetrahedron rule degree {degree}"),
    }
}

/// Triangle rule of the requested degree, as barycentric triples with weights
/// summing to 1 (scale by the triangle area).
pub fn tri_rule(degree: usize) -> &'static [([f64; 3], f64)] {
    const DEG2: [([f64; 3], f64); 3] = [
        ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
    ];
    const A1: f64 = 0.108103018168070227;
    const B1: f64 = 0.445948490915964886;
    const W1: f64 = 0.223381589678011389;
    const A2: f64 = 0.816847572980458513;
    const B2: f64 = 0.091576213509770743;
    const W2: f64 = 0.109951743655321878;
    const DEG4: [([f64; 3], f64); 6] = [
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ];
    // Degree >= 8: 25-point collapsed product rule built from 5-point Gauss
    // via the Duffy map x = s(1-t), y = t with Jacobian (1-t); exact through
    // degree 9 and constructed from the 1D table, so it inherits its
    // precision.
    static PRODUCT9: std::sync::LazyLock<Vec<([f64; 3], f64)>> = std::sync::LazyLock::new(|| {
        let g = gauss_1d(5);
        let mut rule = Vec::with_capacity(25);
        for &(t, wt) in g {
            for &(s, ws) in g {
                let x = s * (1.0 - t);
                let y = t;
                // Weight relative to area 1/2: the Duffy Jacobian is (1-t)
                // and the reference triangle has area 1/2.
                rule.push(([1.0 - x - y, x, y], 2.0 * ws * wt * (1.0 - t)));
            }
        }
        rule
    });
    match degree {
        0..=2 => &DEG2,
        3 | 4 => &DEG4,
        5..=9 => &PRODUCT9,
        _ => panic!("unsupported triangle rule degree {degree}"),
    }
}
