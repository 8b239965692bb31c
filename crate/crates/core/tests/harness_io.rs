use igs_core::detect::DetectorKind;
use igs_core::harness::{
    preset, run_sweep, write_csv, write_csv_to, write_gnuplot, Execution, PresetScale, SimConfig,
    PRESET_NAMES,
};
use igs_core::modem::Modulation;

const HEADER: &str = "detector,k,n_r,n_t,mod,code,zeta_r,zeta_t,arith,snr_db,bits,bit_errors,ber,frames,frame_errors,fer,mults,latency_cycles";

fn small() -> SimConfig {
    let mut c = SimConfig::new(16, 4, DetectorKind::Igs, 1);
    c.modulation = Modulation::Qam16;
    c.snr_db = vec![0.0, 6.0];
    c.frames = 20;
    c.seed = 5;
    c.target_bit_errors = 0;
    c
}

fn csv_of(cfg: &SimConfig) -> String {
    let records = run_sweep(cfg, Execution::default()).unwrap();
    let mut buf = Vec::new();
    write_csv_to(&mut buf, &records).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn csv_schema_and_values() {
    let text = csv_of(&small());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row.len(), 18);
        assert_eq!(&row[..9], &["igs", "1", "16", "4", "16qam", "cc7_133_171", "0.0", "0.0", "float"]);
        let bits: u64 = row[10].parse().unwrap();
        let errors: u64 = row[11].parse().unwrap();
        let ber: f64 = row[12].parse().unwrap();
        assert_eq!(bits, 20 * 4 * 186);
        assert!((ber - errors as f64 / bits as f64).abs() < 1e-15);
        // (K + 2) N_t^2 and the calibrated latency model
        assert_eq!(row[16], "48");
        assert!(row[17].parse::<u64>().unwrap() > 0);
    }
}

#[test]
fn empty_sweep_still_writes_header() {
    let mut buf = Vec::new();
    write_csv_to(&mut buf, &[]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().trim_end(), HEADER);
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small();
    assert_eq!(csv_of(&cfg), csv_of(&cfg));
    let mut other = cfg.clone();
    other.seed = 6;
    assert_ne!(csv_of(&cfg), csv_of(&other));
}

#[test]
fn latency_column_empty_for_baselines() {
    let mut cfg = small();
    cfg.detector = DetectorKind::MmseExact;
    cfg.k = 0;
    let text = csv_of(&cfg);
    let row = text.lines().nth(1).unwrap();
    assert!(row.ends_with(','), "{row}");
}

#[test]
fn files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let records = run_sweep(&cfg, Execution::default()).unwrap();
    let csv_path = dir.path().join("out.csv");
    write_csv(&csv_path, &records).unwrap();
    assert_eq!(std::fs::read_to_string(&csv_path).unwrap(), csv_of(&cfg));

    let gp = dir.path().join("out.dat");
    write_gnuplot(&gp, &[("a".into(), records.clone()), ("b".into(), records)]).unwrap();
    let text = std::fs::read_to_string(&gp).unwrap();
    assert_eq!(text.split("\n\n\n").count(), 2);
    let data: Vec<&str> = text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    assert_eq!(data.len(), 4);
    assert!(data.iter().all(|l| l.split_whitespace().count() == 5));

    assert!(write_csv(&dir.path().join("missing/out.csv"), &[]).is_err());
}

#[test]
fn config_round_trips_through_toml() {
    for name in PRESET_NAMES {
        for cfg in preset(name, PresetScale::Quick).unwrap() {
            let back = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(back, cfg);
        }
    }
}

#[test]
fn config_validation_rejects_bad_input() {
    let ok = "n_r = 8\nn_t = 2\ndetector = \"igs\"\nk = 1\nsnr_db = [0.0]\nframes = 1\n";
    assert!(SimConfig::from_toml_str(ok).is_ok());
    for bad in [
        ok.replace("n_r = 8", "n_r = 1"),
        ok.replace("frames = 1", "frames = 0"),
        ok.replace("snr_db = [0.0]", "snr_db = []"),
        ok.replace("\"igs\"", "\"zf\""),
        format!("{ok}arithmetic = \"fixed\"\ndetector_extra = 1\n"),
        ok.replace("\"igs\"", "\"nse\"").replace("k = 1", "k = 0"),
        format!("{}arithmetic = \"fixed\"\n", ok.replace("\"igs\"", "\"mmse_exact\"")),
        format!("{ok}[kronecker]\nzeta_r = 1.5\nzeta_t = 0.0\n"),
        format!("{ok}arithmetic = \"fixed\"\n[fxp]\ngram = \"s15.40\"\n"),
        format!("{ok}arithmetic = \"fixed\"\n[fxp]\ngrma = \"s15.4\"\n"),
    ] {
        assert!(SimConfig::from_toml_str(&bad).is_err(), "accepted:\n{bad}");
    }
    let partial = format!("{ok}arithmetic = \"fixed\"\n[fxp]\nllr = \"s10.3\"\n");
    let cfg = SimConfig::from_toml_str(&partial).unwrap();
    let fxp = cfg.fxp_config().unwrap();
    assert_eq!(fxp.llr.to_string(), "s10.3");
    assert_eq!(fxp.gram, igs_core::fxp::FxpConfig::for_dims(8, 2).unwrap().gram);
    assert_eq!(SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
}
