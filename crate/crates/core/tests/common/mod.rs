//! Fixtures shared by the integration-test targets.
#![allow(dead_code)]

use dcflex_core::grid::{Bus, Generator, GridCase, Line};
use dcflex_core::instance::Instance;
use dcflex_core::optimizer::QueueParameters;
use dcflex_core::signal::synth::{generate, SignalKind};
use dcflex_core::workload::{DataCenterSpec, FlexClass, JobCluster, LatencyMap};

/// 2 DCs, 3 slots, 3 clusters, 1 generator, 2 buses.
pub fn tiny_instance() -> Instance {
    let gen = Generator {
        gen_id: 1,
        bus_id: 1,
        cost_per_mwh: 30.0,
        p_min: 8.0,
        p_max: 40.0,
        ramp_up: 40.0,
        ramp_down: 40.0,
        startup_ramp: 40.0,
        shutdown_ramp: 40.0,
        initial_output: None,
    };
    let grid = GridCase {
        mva_base: 100.0,
        slack_bus: 1,
        buses: vec![
            Bus { bus_id: 1, base_load: vec![2.0, 6.0, 3.0], generator_ids: vec![1], dc_ids: vec![1] },
            Bus { bus_id: 2, base_load: vec![1.0, 3.0, 2.0], generator_ids: vec![], dc_ids: vec![2] },
        ],
        lines: vec![Line { line_id: 1, from_bus: 1, to_bus: 2, susceptance: 10.0, flow_limit: 1000.0 }],
        generators: vec![gen],
    };
    let job = |id, region, slot, class, weight| JobCluster {
        id,
        user_region: region,
        arrival_slot: slot,
        class,
        weight,
        r_cpu: 1.0,
        r_mem: 1.0,
        r_io: 0.5,
        d_kwh_per_task: 2.0,
    };
    let jobs = vec![
        job(1, 1, 1, FlexClass::Fixed, 2000.0),
        job(2, 2, 1, FlexClass::Interactive, 1500.0),
        job(3, 1, 2, FlexClass::Deferrable, 2500.0),
    ];
    let mut latency = LatencyMap::new();
    for (r, l, v) in [(1, 1, 5.0), (1, 2, 9.0), (2, 1, 7.0), (2, 2, 5.0)] {
        latency.insert(r, l, v);
    }
    let dc = |id, bus| DataCenterSpec {
        id,
        bus,
        cpu_cap: vec![6000.0; 3],
        mem_cap: vec![6000.0; 3],
        io_cap: vec![6000.0; 3],
        p_min: vec![0.0; 3],
        p_max: vec![12.0; 3],
        q_min: -3.0,
        q_max: 3.0,
    };
    let dcs = vec![dc(1, 1), dc(2, 2)];
    let signal = generate(SignalKind::ClippedGaussian, 100_000, 2.0, 3);
    let mut inst = Instance {
        grid,
        jobs,
        latency,
        dcs,
        queues: QueueParameters { dcs: Vec::new() },
        signal,
    };
    let x_base = inst.baseline().unwrap();
    inst.queues = QueueParameters::from_baseline(&inst.dcs, &[0.0, 0.0], &inst.jobs, &x_base).unwrap();
    inst.validate().unwrap();
    inst
}

