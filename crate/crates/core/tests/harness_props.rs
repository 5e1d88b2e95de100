use lwm::channel::ChannelSpec;
use lwm::harness::{run_sweep, trial_seed, ExperimentConfig, TrialMaterial, CSV_HEADER};
use lwm::latent::{LatentShape, Seed};
use lwm::Error;

const SMALL: &str = "\
# small sweep
shape = 1x32x32
k = [16, 32]
channels = [identity; gauss:0.5; flip:0.30,0.45,0.675]
trials = 30
base_seed = 7
fpr = 1e-3
";

#[test]
fn parse_reads_every_field() {
    let cfg = ExperimentConfig::parse(&format!("{SMALL}output = r.csv\nworkers = 2\n")).unwrap();
    assert_eq!(cfg.shape, LatentShape::new(1, 32, 32).unwrap());
    assert_eq!(cfg.k_values, vec![16, 32]);
    assert_eq!(cfg.channel_grid.len(), 3);
    assert_eq!(cfg.channel_grid[1], ChannelSpec::gaussian(0.5).unwrap());
    assert_eq!((cfg.trials, cfg.base_seed, cfg.fpr), (30, Seed(7), 1e-3));
    assert_eq!(cfg.output_path.as_deref(), Some("r.csv"));
    assert_eq!(cfg.workers, Some(2));
}

#[test]
fn invalid_configs_name_the_problem() {
    for (text, needle) in [
        ("shape = 1x32x32\nk = 16\nchannels = identity\ntrials = 0\n", "trials"),
        ("shape = 1x32x32\nk = 6\nchannels = identity\ntrials = 1\n", "k"),
        ("shape = 1x32x32\nk = 16\nchannels = identity\n", "trials"),
        ("shape = 1x32x32\nk = 16\nchannels = bogus\ntrials = 1\n", "bogus"),
        ("shape = 1x32x32\nk = 16\nchannels = identity\ntrials = 1\ncolour = red\n", "colour"),
    ] {
        match ExperimentConfig::parse(text) {
            Err(Error::ConfigInvalid(msg)) => assert!(msg.contains(needle), "{msg:?} lacks {needle:?}"),
            other => panic!("expected ConfigInvalid for {text:?}, got {other:?}"),
        }
    }
}

#[test]
fn sweep_report_independent_of_worker_count() {
    let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
    let mut reports = Vec::new();
    for w in [1, 2, 5] {
        cfg.workers = Some(w);
        reports.push(run_sweep(&cfg).unwrap().to_csv(false));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
    // Running again gives the same bytes.
    assert_eq!(run_sweep(&cfg).unwrap().to_csv(false), reports[0]);
}

#[test]
fn sweep_rows_cover_every_cell() {
    let report = run_sweep(&ExperimentConfig::parse(SMALL).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 6);
    let csv = report.to_csv(false);
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    for row in &report.rows {
        assert!((0.0..=1.0).contains(&row.tpr));
        if row.channel == "identity" {
            assert_eq!((row.bit_acc_mean, row.bit_acc_std, row.tpr), (1.0, 0.0, 1.0));
        } else if row.channel.starts_with("flip") {
            assert!(row.bit_acc_mean < 1.0);
        }
    }
    assert!(report.to_csv(true).lines().next().unwrap().ends_with(",wall_time_s"));
}

#[test]
fn trial_material_is_a_pure_function_of_the_counters() {
    let a = TrialMaterial::derive(trial_seed(Seed(1), 256, 0, 5), 256).unwrap();
    let b = TrialMaterial::derive(trial_seed(Seed(1), 256, 0, 5), 256).unwrap();
    assert_eq!(a.watermark, b.watermark);
    assert_eq!(a.key, b.key);
    assert_eq!((a.latent_seed, a.channel_seed), (b.latent_seed, b.channel_seed));
    let seeds = [
        trial_seed(Seed(1), 256, 0, 5),
        trial_seed(Seed(2), 256, 0, 5),
        trial_seed(Seed(1), 128, 0, 5),
        trial_seed(Seed(1), 256, 1, 5),
        trial_seed(Seed(1), 256, 0, 6),
    ];
    for i in 0..seeds.len() {
        for j in i + 1..seeds.len() {
            assert_ne!(seeds[i], seeds[j]);
        }
    }
}
