//! The three published network instances, embedded as scenarios.

use super::scenario::{Expectation, Scenario, DEFAULT_SAMPLES};

fn e() -> Vec<Vec<f64>> {
    vec![
        vec![2.0, 2.0, 0.0],
        vec![-1.0, -2.0, 1.0],
        vec![1.0, 3.0, -2.0],
    ]
}

fn f_consensus() -> Vec<Vec<f64>> {
    vec![
        vec![2.0, 2.0, 2.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 1.0, 2.0],
    ]
}

fn f_oscillating() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 2.0, 0.0],
        vec![1.125, 1.0, 0.0],
        vec![0.0, 0.0, 10.0],
    ]
}

/// Topology (a): spectrum {0, 1, 2, 3, 3}, not diagonalizable.
pub fn topology_a() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0, 1.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 1.0, 0.0, 0.0, 1.0],
        vec![1.0, 1.0, 1.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
    ]
}

/// Topology (b): spectrum {0, 1.2679, 5.5 +- 1.3229i, 4.7321}.
pub fn topology_b() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 2.0, 0.0, 2.0, 1.0],
        vec![2.0, 0.0, 0.0, 0.0, 0.0],
        vec![2.0, 2.0, 0.0, 0.0, 1.0],
        vec![0.0, 2.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 0.0, 1.0, 0.0],
    ]
}

/// Topology (a) with `w_43 = 2`: spectrum {0, 1, 2, 3, 4}, diagonalizable.
pub fn topology_a_modified() -> Vec<Vec<f64>> {
    let mut w = topology_a();
    w[3][2] = 2.0;
    w
}

pub fn instance(k: u8) -> Option<Scenario> {
    let scenario = match k {
        1 => Scenario {
            name: "paper-1".into(),
            comment: Some(
                "Consensus instance. The topology is (b): trace(L) must equal the eigenvalue \
                 sum 0 + 1.2679 + 5.5 + 5.5 + 4.7321 = 17, which matches the row sums of (b) \
                 and not those of (a) (trace 9)."
                    .into(),
            ),
            e: e(),
            f: f_consensus(),
            w: topology_b(),
            x0: vec![
                vec![-3.2776, -5.9099, 1.8076, 1.5806, -2.9512],
                vec![-0.4794, 3.6798, -1.8174, -3.8132, 0.9020],
                vec![-0.4735, -1.6135, -0.9556, -0.1104, -1.0944],
            ],
            t_span: [0.0, 12.0],
            samples: DEFAULT_SAMPLES,
            tolerances: None,
            expect: Some(Expectation::Consensus),
        },
        2 => Scenario {
            name: "paper-2".into(),
            comment: Some(
                "Imaginary-axis finite eigenvalues on topology (a), whose Laplacian is not \
                 diagonalizable."
                    .into(),
            ),
            e: e(),
            f: f_oscillating(),
            w: topology_a(),
            x0: vec![
                vec![-5.9138, -1.1723, -2.0973, -0.9124, -1.7271],
                vec![2.5077, 0.7047, 1.7981, -0.0531, 3.9337],
                vec![3.2370, 2.4445, 2.3951, 2.6190, 1.6665],
            ],
            t_span: [0.0, 6.0],
            samples: DEFAULT_SAMPLES,
            tolerances: None,
            expect: Some(Expectation::SwarmUnstable),
        },
        3 => Scenario {
            name: "paper-3".into(),
            comment: Some(
                "Same pencil as paper-2 on topology (a) with w_43 = 2, which makes the \
                 Laplacian diagonalizable."
                    .into(),
            ),
            e: e(),
            f: f_oscillating(),
            w: topology_a_modified(),
            x0: vec![
                vec![4.8626, 8.1001, -0.3978, -3.2563, 1.7169],
                vec![2.6541, -7.5692, -4.3644, 1.9946, -0.7866],
                vec![-1.6885, 0.4988, 1.8697, 0.7470, 0.2093],
            ],
            t_span: [0.0, 8.0],
            samples: DEFAULT_SAMPLES,
            tolerances: None,
            expect: Some(Expectation::SwarmStable),
        },
        _ => return None,
    };
    Some(scenario)
}

pub fn all() -> Vec<Scenario> {
    (1..=3).filter_map(instance).collect()
}
