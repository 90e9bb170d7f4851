//! Golden-file tests for the program dump: compiling a fixed instance must
//! render byte-identical text across runs, platforms, and refactors of the
//! builder internals. Regenerate the files with
//! `UPDATE_GOLDEN=1 cargo test -p mcprice --test program_dump` after an
//! intentional format or layout change, and review the diff.

use mcprice::model::{validate_instance, validate_resources, UncheckedInstance, UncheckedResources};
use mcprice::reformulate::{
    build_network_program, build_static_dual_program, build_static_program, dump_program,
};
use mcprice::{McInstance, ResourceModel};
use std::path::Path;

fn single_product() -> McInstance {
    validate_instance(&UncheckedInstance {
        n: 1,
        theta: vec![1.0],
        rho: vec![0.0],
        alpha: vec![0.0],
        beta: vec![1.0],
        psi: vec![0.0],
        x_lower: vec![0.0],
        x_upper: vec![10.0],
    })
    .unwrap()
}

fn two_products_with_resource() -> (McInstance, ResourceModel) {
    let inst = validate_instance(&UncheckedInstance {
        n: 2,
        theta: vec![0.6, 0.4],
        rho: vec![0.0, 0.3, 0.2, 0.0],
        alpha: vec![0.0, -0.1],
        beta: vec![1.0, 0.8],
        psi: vec![0.5, 0.2],
        x_lower: vec![0.5, 0.25],
        x_upper: vec![4.0, 5.0],
    })
    .unwrap();
    let rm = validate_resources(&UncheckedResources {
        n_resources: 1,
        n_products: 2,
        phi: vec![0.5, 1.0],
        capacity: vec![Some(0.15)],
        lambda_bar: 2.0,
    })
    .unwrap();
    (inst, rm)
}

/// Compares against the committed golden text, or rewrites it when
/// `UPDATE_GOLDEN` is set.
fn check(name: &str, golden: &str, actual: &str) {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name);
        std::fs::write(&path, actual).unwrap();
        return;
    }
    assert_eq!(
        actual, golden,
        "dump for {name} drifted from the golden file; \
         regenerate with UPDATE_GOLDEN=1 if the change is intentional"
    );
}

#[test]
fn static_program_dump_is_stable() {
    let (prog, _) = build_static_program(&single_product());
    check(
        "static_single.txt",
        include_str!("golden/static_single.txt"),
        &dump_program(&prog, "static"),
    );
}

#[test]
fn static_dual_program_dump_is_stable() {
    let (prog, _) = build_static_dual_program(&single_product());
    check(
        "static_dual_single.txt",
        include_str!("golden/static_dual_single.txt"),
        &dump_program(&prog, "static-dual"),
    );
}

#[test]
fn network_program_dump_is_stable() {
    let (inst, rm) = two_products_with_resource();
    let (prog, _) = build_network_program(&inst, &rm);
    check(
        "network_two.txt",
        include_str!("golden/network_two.txt"),
        &dump_program(&prog, "network"),
    );
}
