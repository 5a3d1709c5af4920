use std::ffi::CStr;
use std::ptr;

use stablematch_ffi::*;

fn last_error() -> String {
    let p = sm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn matrix_instance_round_trip() {
    let inf = f64::INFINITY;
    #[rustfmt::skip]
    let w = [
        0.0, 1.0, 3.0, inf,
        1.0, 0.0, 2.0, 4.0,
        3.0, 2.0, 0.0, 5.0,
        inf, 4.0, 5.0, 0.0,
    ];
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(
            sm_instance_from_matrix(4, w.as_ptr(), ptr::null(), &mut inst),
            SmStatus::Ok
        );
        let mut n = 0;
        assert_eq!(sm_instance_len(inst, &mut n), SmStatus::Ok);
        assert_eq!(n, 4);
        let mut m = ptr::null_mut();
        assert_eq!(sm_stable_match(inst, &mut m), SmStatus::Ok);
        let partners: Vec<i64> = (0..4)
            .map(|v| {
                let mut p = 0;
                assert_eq!(sm_matching_partner(m, v, &mut p), SmStatus::Ok);
                p
            })
            .collect();
        // 0-1 is the lightest edge, then 2-3 at 5
        assert_eq!(partners, [1, 0, 3, 2]);
        let (mut unmatched, mut stable) = (9, false);
        assert_eq!(
            sm_matching_summary(m, &mut unmatched, &mut stable),
            SmStatus::Ok
        );
        assert_eq!(unmatched, 0);
        assert!(stable);
        let mut p = 0;
        assert_eq!(sm_matching_partner(m, 7, &mut p), SmStatus::InvalidArgument);
        sm_matching_free(m);
        sm_instance_free(inst);
    }
}

#[test]
fn errors_carry_messages() {
    unsafe {
        let w = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(
            sm_instance_from_matrix(2, w.as_ptr(), ptr::null(), ptr::null_mut()),
            SmStatus::NullPointer
        );
        assert!(last_error().contains("out_instance"));

        let mut inst = ptr::null_mut();
        let bad = [0.0, -1.0, -1.0, 0.0];
        assert_eq!(
            sm_instance_from_matrix(2, bad.as_ptr(), ptr::null(), &mut inst),
            SmStatus::InvalidWeight
        );
        assert!(inst.is_null());

        // vertex 0 has two edges at weight 1
        let tied = [0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 1.0, 2.0, 0.0];
        assert_eq!(
            sm_instance_from_matrix(3, tied.as_ptr(), ptr::null(), &mut inst),
            SmStatus::TiedWeights
        );

        let mut v = 0.0;
        assert_eq!(sm_asymmetric_limit(1.5, &mut v), SmStatus::InvalidArgument);
        assert!(last_error().contains("eps"));
        sm_instance_free(ptr::null_mut());
        sm_matching_free(ptr::null_mut());
    }
}

#[test]
fn points_instance() {
    let coords = [0.0, 1.0, 5.0];
    let colors = [0u32, 1, 0];
    unsafe {
        let mut inst = ptr::null_mut();
        let s = sm_instance_from_points(
            1,
            20.0,
            3,
            coords.as_ptr(),
            colors.as_ptr(),
            SmRule::Asymmetric,
            SmMetric::EuclideanTorus,
            &mut inst,
        );
        assert_eq!(s, SmStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(sm_stable_match(inst, &mut m), SmStatus::Ok);
        let mut p = 0;
        sm_matching_partner(m, 2, &mut p);
        assert_eq!(p, -1);
        sm_matching_free(m);
        sm_instance_free(inst);
    }
}

#[test]
fn closed_forms_and_plateau() {
    unsafe {
        let mut b = 0.0;
        assert_eq!(sm_asymmetric_limit(0.25, &mut b), SmStatus::Ok);
        assert!((b - 0.25 * (-3.0f64).exp()).abs() < 1e-15);
        let mut x = 0.0;
        assert_eq!(sm_symmetric_limit(0.5, 0.25, 3, &mut x), SmStatus::Ok);
        assert!((x - 0.125).abs() < 1e-15);

        let eps = [0.25];
        let (mut est, mut bound, mut t) = (0.0, 0.0, 0.0);
        let s = sm_ode_plateau(
            SmModel::Asymmetric,
            eps.as_ptr(),
            1,
            1,
            1e-4,
            1e-10,
            &mut est,
            &mut bound,
            &mut t,
        );
        assert_eq!(s, SmStatus::Ok);
        assert!((est - b).abs() <= bound + 1e-9 && bound <= 1e-4);

        let s = sm_ode_plateau(
            SmModel::Asymmetric,
            eps.as_ptr(),
            2,
            1,
            1e-4,
            1e-10,
            &mut est,
            &mut bound,
            &mut t,
        );
        assert_eq!(s, SmStatus::InvalidArgument);
    }
}

#[test]
fn pwit_estimates() {
    let eps = [0.25];
    let (mut e, mut se) = ([0.0; 2], [0.0; 2]);
    let mut censored = 1;
    unsafe {
        let s = sm_pwit_estimate(
            SmModel::Asymmetric,
            eps.as_ptr(),
            1,
            0.5,
            2000,
            1,
            1_000_000,
            e.as_mut_ptr(),
            se.as_mut_ptr(),
            2,
            &mut censored,
        );
        assert_eq!(s, SmStatus::Ok);
        assert_eq!(censored, 0);
        assert!(e[0] < 0.75 && e[1] < 0.25 && se[0] > 0.0);
        let s = sm_pwit_estimate(
            SmModel::Asymmetric,
            eps.as_ptr(),
            1,
            0.5,
            10,
            1,
            1000,
            e.as_mut_ptr(),
            se.as_mut_ptr(),
            1,
            &mut censored,
        );
        assert_eq!(s, SmStatus::BufferTooSmall);
    }
}

#[test]
fn hierarchical_levels() {
    let mut rows = [SmLevelStats::default(); 4];
    let mut count = 0;
    unsafe {
        let s = sm_hier_levels(
            1.0,
            0.3,
            20,
            3,
            64,
            1e-6,
            rows.as_mut_ptr(),
            rows.len(),
            &mut count,
        );
        assert_eq!(s, SmStatus::Ok);
        assert_eq!(count, 4);
        for (k, r) in rows.iter().enumerate() {
            assert_eq!(r.level, k as i32);
            assert!(r.beta_lo <= r.beta_hi && r.gamma_lo <= r.gamma_hi);
        }
        assert!(rows[3].gamma_lo > rows[0].gamma_hi);
        let s = sm_hier_levels(
            1.0,
            0.3,
            20,
            9,
            64,
            1e-6,
            rows.as_mut_ptr(),
            rows.len(),
            &mut count,
        );
        assert_eq!(s, SmStatus::BufferTooSmall);
    }
}

#[test]
fn header_lists_every_function() {
    let header = include_str!("../include/stablematch.h");
    for f in [
        "sm_last_error",
        "sm_instance_from_matrix",
        "sm_instance_from_points",
        "sm_instance_free",
        "sm_instance_len",
        "sm_stable_match",
        "sm_matching_free",
        "sm_matching_partner",
        "sm_matching_summary",
        "sm_asymmetric_limit",
        "sm_symmetric_limit",
        "sm_ode_plateau",
        "sm_pwit_estimate",
        "sm_hier_levels",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing");
    }
    assert!(header.contains("typedef struct SmInstance SmInstance;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler, skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"stablematch.h\"\nint main(void) { double v; return sm_asymmetric_limit(0.25, &v) == SM_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = std::process::Command::new(cc)
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            include,
        ])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            std::process::Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
