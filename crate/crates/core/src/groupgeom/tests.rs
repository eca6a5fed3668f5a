use super::*;
use rand::Rng;

fn model(kind: &str, closed: bool) -> GroupModel {
    let chart = Chart::new("M", &["x1", "x2"]);
    let gens: &[&[&str]] = match kind {
        "grushin" => &[&["1", "0"], &["0", "x1"]],
        _ => &[&["1", "0"], &["0", "sin(x1)"]],
    };
    let fields: Vec<_> = gens.iter().map(|g| VectorField::parse(chart.clone(), g).unwrap()).collect();
    let opts = BuildOptions {
        sample_box: vec![(-2.0, 2.0), (-2.0, 2.0)],
        closed_form: if closed { builtin::lookup(kind) } else { None },
        ..Default::default()
    };
    GroupModel::build(kind, &fields, vec![0.0, 0.0], opts).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol)
}

#[test]
fn flow_examples() {
    let g = model("grushin", false);
    assert!(close(&g.flow(&[1.0, 0.0, 0.0], &[0.0, 0.0], 1.0).unwrap(), &[1.0, 0.0], 1e-12));
    assert!(close(&g.e_map_flow(&[1.0, 2.0, 3.0]).unwrap(), &[1.0, 4.0], 1e-9));
    assert_eq!(g.e_map_flow(&[0.0; 3]).unwrap(), vec![0.0, 0.0]);
    let chart = Chart::new("R", &["x1"]);
    let f = VectorField::parse(chart, &["x1"]).unwrap();
    let y = integrate(|y, out| f.compile().unwrap().eval_into(y, out), &[1.0], 0.7, &OdeOptions::default()).unwrap();
    assert!((y[0] - 0.7f64.exp()).abs() < 1e-9);
}

#[test]
fn sine_e_map_example() {
    let s = model("sine-se2", true);
    let x = s.e_map(&[std::f64::consts::PI, 1.0, 0.0]).unwrap();
    assert!((x[1] - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    let xf = s.e_map_flow(&[std::f64::consts::PI, 1.0, 0.0]).unwrap();
    assert!(close(&x, &xf, 1e-8));
}

#[test]
fn e_map_matches_closed_forms() {
    for kind in ["grushin", "sine-se2"] {
        let g = model(kind, true);
        let cf = builtin::lookup(kind).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let a = g.e_map_flow(&xi).unwrap();
            assert!(close(&a, &cf.e_map(&xi), 1e-8), "{kind} {xi:?}");
        }
    }
}

#[test]
fn split_roundtrip_and_product() {
    for kind in ["grushin", "sine-se2"] {
        let g = model(kind, true);
        let cf = builtin::lookup(kind).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let back = cf.split_to_exp(&cf.exp_to_split(&xi));
            assert!(close(&back, &xi, 1e-9));
            let eta: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let closed = g.mul(&xi, &eta).unwrap();
            let flowed = g.exp.mul(&xi, &eta, &OdeOptions::tight()).unwrap();
            assert!(close(&closed, &flowed, 1e-8), "{kind}: {closed:?} vs {flowed:?}");
        }
    }
}

#[test]
fn section_properties() {
    for kind in ["grushin", "sine-se2"] {
        for closed in [true, false] {
            let g = model(kind, closed);
            assert!(close(&g.section(&[0.0, 0.0]).unwrap(), &[0.0; 3], 1e-12));
            for x in g.sample_points(25, 11) {
                let l = g.section(&x).unwrap();
                assert!(close(&g.e_map_flow(&l).unwrap(), &x, 1e-8), "{kind} {closed} {x:?}");
            }
        }
    }
    let g = model("grushin", true);
    let l = g.section(&[0.4, -1.3]).unwrap();
    assert!(close(&g.to_split(&l).unwrap(), &[0.4, -1.3, 0.0], 1e-14));
}

#[test]
fn generic_split_matches_closed_grushin() {
    let a = model("grushin", true);
    let b = model("grushin", false);
    for x in a.sample_points(10, 2) {
        let xs = [x[0], x[1], 0.7];
        let ea = a.from_split(&xs).unwrap();
        let eb = b.from_split(&xs).unwrap();
        assert!(close(&ea, &eb, 1e-8));
        assert!(close(&b.to_split(&eb).unwrap(), &xs, 1e-8));
    }
}

#[test]
fn rho_values() {
    let g = model("grushin", true);
    assert!((g.rho(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(g.rho_symbolic().to_string(), "1/sqrt(1 + x1^2)");
    let s = model("sine-se2", true);
    assert!(s.rho_symbolic().is_const_one());
}

#[test]
fn ker_frames() {
    let g = model("grushin", true);
    for a in [-1.5, 0.0, 0.3, 2.0] {
        let k = g.ker_frame(&[a, 0.2]).unwrap();
        let r = (1.0 + a * a).sqrt();
        let want = [0.0, 1.0 / r, -a / r];
        assert!(close(k.as_slice(), &want, 1e-12), "{a}: {k}");
    }
    let s = model("sine-se2", true);
    for a in [-3.0, 0.0, 1.0, std::f64::consts::FRAC_PI_2, 2.5] {
        let k = s.ker_frame(&[a, -0.4]).unwrap();
        assert!(close(k.as_slice(), &[0.0, a.cos(), -a.sin()], 1e-12), "{a}: {k}");
        let x = s.frame(&[a, -0.4]).unwrap();
        assert!((x * &k).norm() < 1e-14);
    }
}

#[test]
fn fiber_scaling() {
    for kind in ["grushin", "sine-se2"] {
        let g = model(kind, true);
        assert!((g.fiber_scaling_c(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
        for x in g.sample_points(10, 9) {
            let c = g.fiber_scaling_c(&x).unwrap();
            let c0 = g.fiber_scaling_c_at(&x, &[0.0]).unwrap();
            let c1 = g.fiber_scaling_c_at(&x, &[1.3]).unwrap();
            assert!((c - c0).abs() < 1e-8 && (c0 - c1).abs() < 1e-8, "{kind} {x:?}: {c} {c0} {c1}");
            let rb = g.rho_bar(&x).unwrap();
            assert!((rb - 1.0).abs() < 1e-10, "{kind} {x:?}: {rb}");
        }
    }
}

#[test]
fn factorization_against_jacobian() {
    for kind in ["grushin", "sine-se2"] {
        let g = model(kind, true);
        let cf = g.closed_form.clone().unwrap();
        for x in g.sample_points(10, 4) {
            let xs = [x[0], x[1], 0.6];
            let h = 1e-5;
            let mut j = DMatrix::zeros(3, 3);
            for c in 0..3 {
                let mut p = xs;
                let mut m = xs;
                p[c] += h;
                m[c] -= h;
                let (a, b) = (cf.split_to_exp(&p), cf.split_to_exp(&m));
                for r in 0..3 {
                    j[(r, c)] = (a[r] - b[r]) / (2.0 * h);
                }
            }
            let xi = cf.split_to_exp(&xs);
            let lhs = j.determinant().abs() * g.haar(&xi);
            assert!((lhs - g.rho_bar(&x).unwrap()).abs() < 1e-8, "{kind}: {lhs}");
        }
    }
}

#[test]
fn vertical_matrix_matches_closed_form() {
    // the Newton section of the SE(2) cover differs from the closed-form one
    for (kind, closed) in [("grushin", true), ("grushin", false), ("sine-se2", true)] {
        {
            let g = model(kind, closed);
            let rows = builtin::lookup(kind).unwrap().vertical_exprs(&["x1", "x2"]);
            for x in g.sample_points(8, 21) {
                let mm = g.vertical_numeric(&x).unwrap();
                for i in 0..3 {
                    let want = rows[i][0].evaluate(&["x1", "x2"], &x).unwrap();
                    assert!((mm[(i, 0)] - want).abs() < 1e-6, "{kind} {closed} row {i} at {x:?}: {} vs {want}", mm[(i, 0)]);
                }
            }
        }
    }
}

#[test]
fn e_relatedness() {
    for kind in ["grushin", "sine-se2"] {
        let g = model(kind, true);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let x = g.e_map(&xi).unwrap();
            let fr = g.frame(&x).unwrap();
            for i in 0..3 {
                let h = 1e-5;
                let mut e = vec![0.0; 3];
                e[i] = h;
                let a = g.e_map(&g.mul(&xi, &e).unwrap()).unwrap();
                e[i] = -h;
                let b = g.e_map(&g.mul(&xi, &e).unwrap()).unwrap();
                for r in 0..2 {
                    let d = (a[r] - b[r]) / (2.0 * h);
                    assert!((d - fr[(r, i)]).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn flipped_orientation_reverses_fiber() {
    let chart = Chart::new("M", &["x1", "x2"]);
    let fields: Vec<_> = [["1", "0"], ["0", "x1"]].iter().map(|g| VectorField::parse(chart.clone(), g).unwrap()).collect();
    let opts = BuildOptions { flip_orientation: true, closed_form: builtin::lookup("grushin"), ..Default::default() };
    let g = GroupModel::build("grushin", &fields, vec![0.0, 0.0], opts).unwrap();
    let mm = g.vertical_numeric(&[0.5, 0.1]).unwrap();
    assert!((mm[(1, 0)] + 1.0).abs() < 1e-9);
    assert!((g.fiber_scaling_c(&[0.5, 0.1]).unwrap() - 1.25f64.sqrt()).abs() < 1e-12);
    assert_eq!(g.vertical_closed().unwrap()[1][0].to_string(), "-1");
}

#[test]
fn completeness_flags_blow_up() {
    let chart = Chart::new("M", &["x1", "x2"]);
    let g = model("grushin", false);
    assert!(g.completeness_heuristic(&g.sample_points(4, 1)).complete);
    let fields = vec![VectorField::parse(chart.clone(), &["1", "0"]).unwrap(), VectorField::parse(chart, &["0", "1 + x2^2"]).unwrap()];
    let bad = GroupModel::build("bad", &fields, vec![0.0, 0.0], BuildOptions::default());
    // the algebra is infinite dimensional or the flow escapes; either is reported
    if let Ok(b) = bad {
        assert!(!b.completeness_heuristic(&[vec![0.0, 1.0]]).complete);
    }
}
