use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safeguard_core::geometry::Point2;
use safeguard_core::memory::PersonnelDb;
use safeguard_core::perception::{
    anomaly_regions, backproject, cosine_similarity, fire_severity, match_person, project, thermal_diff,
    thermal_profile, CameraIntrinsics, ThermalImage, DEFAULT_MATCH_THRESHOLD, DEFAULT_WARNING_DELTA_C,
};
use safeguard_core::worldsim::{load_scenario, Pipe};
use std::collections::BTreeSet;
use std::path::PathBuf;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn severity_examples_and_monotonicity() {
    assert_eq!(fire_severity(0.0, 5.0, 0.9).unwrap(), 0.0);
    assert!((fire_severity(9216.0, 921_600.0, 0.92).unwrap() - 0.0092).abs() < 1e-15);
    assert_eq!(fire_severity(921_600.0, 921_600.0, 1.0).unwrap(), 1.0);
    assert!(fire_severity(1.0, 0.0, 0.5).is_err());
    assert!(fire_severity(-1.0, 10.0, 0.5).is_err());
    assert!(fire_severity(1.0, 10.0, 1.5).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let frame = 1000.0;
        let (a, b) = (rng.random_range(0.0..frame), rng.random_range(0.0..frame));
        let (c, d) = (rng.random::<f64>(), rng.random::<f64>());
        let s = |area: f64, conf: f64| fire_severity(area, frame, conf).unwrap();
        assert!(s(a.min(b), c) <= s(a.max(b), c));
        assert!(s(a, c.min(d)) <= s(a, c.max(d)));
        assert!((0.0..=1.0).contains(&s(a, c)));
    }
}

#[test]
fn thermal_diff_examples() {
    let base = ThermalImage::filled(8, 6, 65.0);
    let mut cur = base.clone();
    assert!(thermal_diff(&cur, &base).unwrap().temps.iter().all(|&d| d == 0.0));
    cur.set(3, 4, 125.8);
    let d = thermal_diff(&cur, &base).unwrap();
    assert!((d.get(3, 4) - 60.8).abs() < 1e-12);
    assert!(thermal_diff(&ThermalImage::filled(2, 2, 0.0), &base).is_err());
}

#[test]
fn thermal_diff_matches_loop_and_is_antisymmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (w, h) = (rng.random_range(1..10), rng.random_range(1..10));
        let a: Vec<f64> = (0..w * h).map(|_| rng.random_range(-20.0..150.0)).collect();
        let b: Vec<f64> = (0..w * h).map(|_| rng.random_range(-20.0..150.0)).collect();
        let ia = ThermalImage::from_vec(w, h, a.clone()).unwrap();
        let ib = ThermalImage::from_vec(w, h, b.clone()).unwrap();
        let ab = thermal_diff(&ia, &ib).unwrap();
        let ba = thermal_diff(&ib, &ia).unwrap();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                assert_eq!(ab.get(x, y), a[i] - b[i]);
                assert_eq!(ab.get(x, y), -ba.get(x, y));
            }
        }
    }
}

/// Recursive 4-neighbour flood fill; returns components as pixel sets.
fn flood_oracle(mask: &[Vec<bool>]) -> Vec<BTreeSet<(usize, usize)>> {
    fn fill(mask: &[Vec<bool>], seen: &mut [Vec<bool>], x: i64, y: i64, out: &mut BTreeSet<(usize, usize)>) {
        let (h, w) = (mask.len() as i64, mask[0].len() as i64);
        if x < 0 || y < 0 || x >= w || y >= h {
            return;
        }
        let (ux, uy) = (x as usize, y as usize);
        if seen[uy][ux] || !mask[uy][ux] {
            return;
        }
        seen[uy][ux] = true;
        out.insert((ux, uy));
        fill(mask, seen, x + 1, y, out);
        fill(mask, seen, x - 1, y, out);
        fill(mask, seen, x, y + 1, out);
        fill(mask, seen, x, y - 1, out);
    }
    let mut seen = vec![vec![false; mask[0].len()]; mask.len()];
    let mut comps = Vec::new();
    for y in 0..mask.len() {
        for x in 0..mask[0].len() {
            let mut c = BTreeSet::new();
            fill(mask, &mut seen, x as i64, y as i64, &mut c);
            if !c.is_empty() {
                comps.push(c);
            }
        }
    }
    comps
}

#[test]
fn anomaly_regions_match_flood_fill_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let mask: Vec<Vec<bool>> = (0..8).map(|_| (0..8).map(|_| rng.random_bool(0.45)).collect()).collect();
        let mut img = ThermalImage::filled(8, 8, 0.0);
        for y in 0..8 {
            for x in 0..8 {
                if mask[y][x] {
                    img.set(x, y, rng.random_range(15.001..80.0));
                } else {
                    img.set(x, y, rng.random_range(-5.0..15.0));
                }
            }
        }
        let regions = anomaly_regions(&img, DEFAULT_WARNING_DELTA_C).unwrap();
        let got: BTreeSet<BTreeSet<(usize, usize)>> =
            regions.iter().map(|r| r.pixels.iter().copied().collect()).collect();
        let want: BTreeSet<BTreeSet<(usize, usize)>> = flood_oracle(&mask).into_iter().collect();
        assert_eq!(got, want);
        // partition of the hot set, sorted by peak
        let total: usize = regions.iter().map(|r| r.pixels.len()).sum();
        assert_eq!(total, mask.iter().flatten().filter(|&&m| m).count());
        assert!(regions.windows(2).all(|w| w[0].max_delta >= w[1].max_delta));
        for r in &regions {
            let peak = r.pixels.iter().map(|&(x, y)| img.get(x, y)).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(r.max_delta, peak);
        }
    }
}

#[test]
fn anomaly_region_examples() {
    let zero = ThermalImage::filled(5, 5, 0.0);
    assert!(anomaly_regions(&zero, 15.0).unwrap().is_empty());
    let mut one = zero.clone();
    one.set(2, 3, 60.8);
    let r = anomaly_regions(&one, 15.0).unwrap();
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].pixels, vec![(2, 3)]);
    assert_eq!(r[0].max_delta, 60.8);
    // exactly at threshold is not anomalous
    one.set(2, 3, 15.0);
    assert!(anomaly_regions(&one, 15.0).unwrap().is_empty());
    // diagonal neighbours stay separate
    let mut diag = zero.clone();
    diag.set(0, 0, 30.0);
    diag.set(1, 1, 40.0);
    assert_eq!(anomaly_regions(&diag, 15.0).unwrap().len(), 2);
    assert!(anomaly_regions(&zero, 0.0).is_err());
}

#[test]
fn backprojection_examples_and_properties() {
    let k = CameraIntrinsics::default();
    assert_eq!(backproject(k.cx, k.cy, 6.2, &k).unwrap(), [0.0, 0.0, 6.2]);
    let p = backproject(k.cx + k.fx, k.cy, 2.0, &k).unwrap();
    assert!((p[0] - 2.0).abs() < 1e-12 && p[1] == 0.0 && p[2] == 2.0);
    assert!(backproject(1.0, 1.0, 0.0, &k).is_err());
    assert!(backproject(1.0, 1.0, -3.0, &k).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let (u, v, z) = (rng.random_range(0.0..1280.0), rng.random_range(0.0..720.0), rng.random_range(0.1..20.0));
        let p = backproject(u, v, z, &k).unwrap();
        let (pu, pv) = project(p, &k).unwrap();
        assert!((pu - u).abs() < 1e-9 && (pv - v).abs() < 1e-9);
        let p2 = backproject(u, v, 2.0 * z, &k).unwrap();
        for i in 0..3 {
            assert!((p2[i] - 2.0 * p[i]).abs() <= 1e-12 * (1.0 + p[i].abs()));
        }
    }
}

#[test]
fn profile_of_uniform_pipe_is_flat() {
    let pipe = Pipe::new("P", vec![Point2::new(0.0, 0.0), Point2::new(6.0, 0.0)], 65.0, 120.0, 1.0);
    let prof = thermal_profile(&pipe, 0.5).unwrap();
    assert_eq!(prof.positions.len(), 13);
    assert!(prof.temps.iter().all(|&t| t == 65.0));
    assert_eq!(prof.peak_index, 0);
    assert!(prof.positions.windows(2).all(|w| w[1] > w[0]));
    assert!(thermal_profile(&pipe, 0.0).is_err());
}

#[test]
fn stuck_valve_profile_peaks_at_valve() {
    let sc = load_scenario(scenario("thermal_pv.json")).unwrap();
    let mut world = sc.world.clone();
    world.apply_event(&sc.script.events[0]).unwrap();
    let pipe = world.pipe("PP-C-15").unwrap();
    let prof = thermal_profile(pipe, 0.1).unwrap();
    assert!((prof.peak_position() - 4.5).abs() <= 0.1, "peak at {}", prof.peak_position());
    assert!((prof.peak_temp() - 125.8).abs() < 0.05, "peak {}", prof.peak_temp());
    // linear-scan oracle: first index of the maximum
    let mut best = 0;
    for i in 1..prof.temps.len() {
        if prof.temps[i] > prof.temps[best] {
            best = i;
        }
    }
    assert_eq!(prof.peak_index, best);
}

#[test]
fn cosine_examples_and_oracle() {
    let e = [0.3, -0.4, 0.5];
    assert!((cosine_similarity(&e, &e).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());

    // compensated (Neumaier) sums as the higher-precision reference
    fn ksum(xs: impl Iterator<Item = f64>) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for x in xs {
            let t = s + x;
            c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            s = t;
        }
        s + c
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let a: Vec<f64> = (0..512).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..512).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot = ksum(a.iter().zip(&b).map(|(x, y)| x * y));
        let na = ksum(a.iter().map(|x| x * x)).sqrt();
        let nb = ksum(b.iter().map(|x| x * x)).sqrt();
        assert!((cosine_similarity(&a, &b).unwrap() - dot / (na * nb)).abs() < 1e-12);
    }
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Vector with cosine exactly `c` to unit `a`, built from an orthogonal unit direction.
fn at_similarity(a: &[f64], c: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = unit(rng, a.len());
    let proj: f64 = r.iter().zip(a).map(|(x, y)| x * y).sum();
    let o: Vec<f64> = r.iter().zip(a).map(|(x, y)| x - proj * y).collect();
    let on = o.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = (1.0 - c * c).sqrt();
    a.iter().zip(&o).map(|(x, y)| c * x + s * y / on).collect()
}

#[test]
fn match_person_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut db = PersonnelDb::new();
    assert_eq!(match_person(&unit(&mut rng, 512), &db, DEFAULT_MATCH_THRESHOLD).unwrap(), None);
    let e = unit(&mut rng, 512);
    db.insert("EMP-1", e.clone(), true).unwrap();
    let (id, s) = match_person(&e, &db, DEFAULT_MATCH_THRESHOLD).unwrap().unwrap();
    assert_eq!(id, "EMP-1");
    assert!((s - 1.0).abs() < 1e-12);
    let below = at_similarity(&e, 0.69, &mut rng);
    assert_eq!(match_person(&below, &db, DEFAULT_MATCH_THRESHOLD).unwrap(), None);
    let above = at_similarity(&e, 0.71, &mut rng);
    assert!(match_person(&above, &db, DEFAULT_MATCH_THRESHOLD).unwrap().is_some());
    // equal similarity: smaller id wins
    db.insert("EMP-0", e.clone(), true).unwrap();
    assert_eq!(match_person(&e, &db, 0.7).unwrap().unwrap().0, "EMP-0");
}

#[test]
fn match_person_matches_brute_force_and_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let mut db = PersonnelDb::new();
        let mut gallery = Vec::new();
        for i in 0..10 {
            let e = unit(&mut rng, 64);
            db.insert(&format!("P-{i:02}"), e.clone(), true).unwrap();
            gallery.push((format!("P-{i:02}"), e));
        }
        let target = &gallery[rng.random_range(0..10)].1;
        let q: Vec<f64> = target.iter().map(|x| x + rng.random_range(-0.1..0.1)).collect();
        let mut best: Option<(String, f64)> = None;
        for (id, e) in &gallery {
            let s = cosine_similarity(&q, e).unwrap();
            if best.as_ref().map_or(true, |b| s > b.1) {
                best = Some((id.clone(), s));
            }
        }
        let want = best.filter(|b| b.1 >= 0.7).map(|b| b.0);
        let got = match_person(&q, &db, 0.7).unwrap().map(|m| m.0);
        assert_eq!(got, want);
        let scaled: Vec<f64> = q.iter().map(|x| x * 37.5).collect();
        assert_eq!(match_person(&scaled, &db, 0.7).unwrap().map(|m| m.0), got);
    }
}
