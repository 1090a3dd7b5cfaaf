fn main() {
    let mesh = specbounds::mesh::gen_icosphere(5, 1.0).unwrap();
    let pair = specbounds::laplace::assemble(&mesh).unwrap();
    match specbounds::laplace::eigs(&pair, 9, 1e-9) {
        Ok(s) => println!("ok: {:?}", s.eigenvalues),
        Err(e) => println!("err: {e}"),
    }
}
