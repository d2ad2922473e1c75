use concat_fec::codegen::{girth, sample_random, Encoder, SparseParityCheck};
use concat_fec::ensemble::examples;

#[test]
fn example1_sample_at_full_length() {
    let e = examples::example1();
    let n_c = 100_000;
    let h = sample_random(&e, n_c, 1).unwrap();
    assert_eq!(h.n_cols(), n_c);
    let rows = h.row_degree_histogram();
    assert_eq!(rows.iter().sum::<usize>(), rows[24], "every check has degree 24");
    assert!(h.lambda_distance(&e) <= 0.02);
    let fractions = e.coded_node_fractions();
    let hist = h.column_degree_histogram();
    for (d, &want) in fractions.iter().enumerate().skip(1) {
        let got = hist.get(d).copied().unwrap_or(0) as f64 / n_c as f64;
        assert!((got - want).abs() < 0.005, "degree {d}: {got} vs {want}");
    }
    let k = h.info_set().unwrap().len() as f64;
    assert!((k / n_c as f64 - e.r_c).abs() <= 0.005 * e.r_c, "{} vs {}", k / n_c as f64, e.r_c);
}

#[test]
fn sampled_code_encodes_and_round_trips() {
    let e = examples::example2();
    let h = sample_random(&e, 3000, 4).unwrap();
    let enc = Encoder::new(&h);
    let msg: Vec<u8> = (0..enc.k()).map(|i| (i * 7 % 3 == 0) as u8).collect();
    let x = enc.encode(&h, &msg).unwrap();
    assert!(h.is_codeword(&x));
    let mut buf = Vec::new();
    h.write_text(&mut buf).unwrap();
    let back = SparseParityCheck::read_text(&buf[..]).unwrap();
    assert_eq!(back.n_edges(), h.n_edges());
    assert!(back.edges().eq(h.edges()));
    assert!(girth(&back).at_least(4));
}
