use lmrk_net::{CostModel, Layout};
use lmrk_workflow::*;

#[test]
fn unit_cost_rows_match_closed_form() {
    let rows = bench_broadcast(&[9, 25, 100, 400], &[Layout::Flat, Layout::Tree], CostModel::new(1.0, 1.0, 0.0).unwrap())
        .unwrap();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        let k = (r.n as f64).sqrt().ceil() as usize;
        match r.layout {
            Layout::Flat => {
                assert_eq!(r.max_delay, r.n as f64);
                assert_eq!(r.root_traffic, r.n);
            }
            Layout::Tree => {
                assert_eq!(r.max_delay, (k + (r.n - k).div_ceil(k)) as f64);
                assert_eq!(r.out_degree, k);
            }
        }
    }
    let csv = bench_csv(&rows);
    assert!(csv.starts_with("n,layout,out_degree,max_delay,root_traffic\n"));
    assert!(csv.contains("100,tree,10,19,10\n"));
}
