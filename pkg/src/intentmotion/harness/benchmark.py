"""End-to-end training and evaluation report assembly.

`train_all` fits every model (occupancy autoencoder, five placeability
variants, two graspability posteriors, the motion predictor) on the
persona-split synthetic dataset.  `run_benchmark` turns a trained
bundle into report files: placeability and graspability summary tables,
the valid-region-rate-over-time CSV, the per-timestep motion error
table, and pre-place density heatmaps.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .. import affordance as af
from .. import densities as dn
from .. import scene as sc
from .. import trajopt as tj
from . import datasets as ds
from . import generator as gen


@dataclass(frozen=True)
class BenchmarkConfig:
    seed: int = 1
    personas: int = 5
    episodes_per_persona: int = 60
    path_jitter: float = 0.008
    timing_jitter: float = 0.1
    autoencoder_epochs: int = 50
    place_epochs: int = 100
    grasp_epochs: int = 300
    predictor_epochs: int = 25
    place_lr: float = 1e-3
    penalty_weight: float = 3.25
    grasp_lr: float = 1e-3
    predictor_lr: float = 2e-3
    eval_episode_cap: int = 24
    goal_variant: str = "transfer"  # placeability model feeding the optimizer

    def generator(self):
        return gen.GeneratorConfig(
            seed=self.seed, personas=self.personas,
            episodes_per_persona=self.episodes_per_persona,
            path_jitter=self.path_jitter, timing_jitter=self.timing_jitter)


@dataclass
class TrainedBundle:
    encoder_store: object = None
    place_models: dict = field(default_factory=dict)
    grasp_models: dict = field(default_factory=dict)
    predictor: object = None
    place_metrics: dict = field(default_factory=dict)
    grasp_metrics: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)


def train_autoencoder(config, train_eps):
    data, _ = ds.extract_training_pairs(train_eps, "autoencoder")
    store, curve = af.train_occupancy_autoencoder(
        data, epochs=config.autoencoder_epochs, seed=config.seed)
    return store, curve


def train_place_variant(config, variant, train_set, test_set, encoder_store):
    enc = encoder_store if variant in ("transfer", "transfer-penalty") else None
    model = af.assemble_placeability(variant, encoder_store=enc,
                                     seed=config.seed)
    curve, metrics = af.train_placeability(
        model, train_set, test_set, epochs=config.place_epochs,
        lr=config.place_lr, seed=config.seed,
        penalty_weight=config.penalty_weight)
    return model, curve, metrics


def train_grasp_posterior(config, posterior, train_set, test_set):
    model = af.assemble_graspability(posterior, seed=config.seed)
    curve, metrics = af.train_graspability(
        model, train_set, test_set, epochs=config.grasp_epochs,
        lr=config.grasp_lr, seed=config.seed, augment_reflect=True)
    return model, curve, metrics


def train_all(config, train_eps, test_eps, progress=None):
    def note(msg):
        if progress:
            progress(msg)

    bundle = TrainedBundle()
    note("training occupancy autoencoder")
    bundle.encoder_store, curve = train_autoencoder(config, train_eps)
    bundle.curves["autoencoder"] = curve

    place_train, _ = ds.extract_training_pairs(train_eps, "placeability")
    place_test, _ = ds.extract_training_pairs(test_eps, "placeability")
    for variant in af.PLACE_VARIANTS:
        note(f"training placeability variant {variant}")
        model, curve, metrics = train_place_variant(
            config, variant, place_train, place_test, bundle.encoder_store)
        bundle.place_models[variant] = model
        bundle.place_metrics[variant] = metrics
        bundle.curves[f"place/{variant}"] = curve

    grasp_train, _ = ds.extract_training_pairs(train_eps, "graspability")
    grasp_test, _ = ds.extract_training_pairs(test_eps, "graspability")
    for posterior in ("gaussian", "vmf"):
        note(f"training graspability posterior {posterior}")
        model, curve, metrics = train_grasp_posterior(
            config, posterior, grasp_train, grasp_test)
        bundle.grasp_models[posterior] = model
        bundle.grasp_metrics[posterior] = metrics
        bundle.curves[f"grasp/{posterior}"] = curve

    note("training motion predictor")
    windows, _ = ds.extract_training_pairs(train_eps, "predictor")
    bundle.predictor, curve = tj.train_predictor(
        windows, epochs=config.predictor_epochs, lr=config.predictor_lr,
        seed=config.seed)
    bundle.curves["predictor"] = curve
    return bundle


# ---------------------------------------------------------------------------
# goal extraction for the trajectory evaluation


def affordance_place_goal(model, problem):
    """World-frame 3D place prediction at the problem's query frame."""
    ep = problem["episode"]
    traj, _ = ds._traj_window(ep, problem["query_frame"])
    onehot = sc.onehot_code(ep.target_type, "table")
    features = sc.plane_feature_stack(gen.TABLE, ep.objects).stack()
    dist = af.placeability_predict(model, traj, onehot, features[None])[0]
    # most probable component's mean: the same point estimate scored by
    # valid_region_rate, so the optimizer is fed an actual mixture mode
    # rather than a between-modes expectation
    point = gen.TABLE.to_world(dist.mu[dn.mdn_top_component(dist)])
    return np.array([point[0], point[1], gen.TABLE.height])


def attach_affordance_goals(model, problems):
    for prob in problems:
        prob["goals"]["affordance"] = affordance_place_goal(model, prob)
    return problems


# ---------------------------------------------------------------------------
# report assembly


def placeability_report(bundle, place_test):
    rows = {v: bundle.place_metrics[v] for v in af.PLACE_VARIANTS}
    return {"variants": rows, "baseline_mse": af.baseline_place_mse(place_test)}


def graspability_report(bundle, grasp_train, grasp_test):
    stats = af.compute_grasp_stats(grasp_train)
    # combinations unseen in training fall back to the pooled mean so the
    # baseline stays defined on small datasets
    pooled = float(np.mean(list(stats.values())))
    for key in set(zip(grasp_test.object_type, grasp_test.surface)):
        stats.setdefault((str(key[0]), str(key[1])), pooled)
    return {
        "gaussian_mse": bundle.grasp_metrics["gaussian"]["test"]["mse"],
        "vmf_mse": bundle.grasp_metrics["vmf"]["test"]["mse"],
        "baseline_mse": af.baseline_grasp_mse(stats, grasp_test),
    }


def valid_region_report(bundle, place_test):
    return {v: af.valid_region_rate(bundle.place_models[v], place_test)
            for v in af.PLACE_VARIANTS}


def motion_report(bundle, config, test_eps):
    problems = ds.prediction_problems(test_eps)[:config.eval_episode_cap]
    attach_affordance_goals(bundle.place_models[config.goal_variant], problems)
    return tj.evaluate_prediction(bundle.predictor, problems)


def run_benchmark(bundle, config, train_eps, test_eps, out_dir,
                  progress=None):
    """Full evaluation; writes report files and returns the report dict."""
    def note(msg):
        if progress:
            progress(msg)

    os.makedirs(out_dir, exist_ok=True)
    place_train, _ = ds.extract_training_pairs(train_eps, "placeability")
    place_test, _ = ds.extract_training_pairs(test_eps, "placeability")
    grasp_train, _ = ds.extract_training_pairs(train_eps, "graspability")
    grasp_test, _ = ds.extract_training_pairs(test_eps, "graspability")

    note("evaluating placeability")
    table1 = placeability_report(bundle, place_test)
    note("evaluating graspability")
    table2 = graspability_report(bundle, grasp_train, grasp_test)
    note("evaluating valid-region rates")
    fig5 = valid_region_report(bundle, place_test)
    note("evaluating motion prediction")
    table3 = motion_report(bundle, config, test_eps)

    write_place_table(table1, os.path.join(out_dir, "placeability"))
    write_grasp_table(table2, os.path.join(out_dir, "graspability"))
    write_valid_region_csv(fig5, os.path.join(out_dir, "valid_region.csv"))
    write_motion_table(table3, os.path.join(out_dir, "motion"))
    write_metrics_csv(bundle, os.path.join(out_dir, "metrics.csv"))
    export_heatmaps(bundle.place_models[config.goal_variant], test_eps[0],
                    os.path.join(out_dir, "heatmap"))
    return {"placeability": table1, "graspability": table2,
            "valid_region": fig5, "motion": table3}


def write_place_table(report, path_prefix):
    with open(path_prefix + ".csv", "w") as f:
        f.write("variant,split,nll,mse\n")
        for variant, m in report["variants"].items():
            for split in ("train", "test"):
                f.write(f"{variant},{split},{m[split]['nll']:.6f},"
                        f"{m[split]['mse']:.6f}\n")
        f.write(f"baseline,test,,{report['baseline_mse']:.6f}\n")
    with open(path_prefix + ".txt", "w") as f:
        f.write("Placeability models (NLL / MSE per split)\n")
        f.write(f"{'variant':<18}{'train NLL':>10}{'train MSE':>10}"
                f"{'test NLL':>10}{'test MSE':>10}\n")
        for variant, m in report["variants"].items():
            f.write(f"{variant:<18}{m['train']['nll']:>10.4f}"
                    f"{m['train']['mse']:>10.4f}{m['test']['nll']:>10.4f}"
                    f"{m['test']['mse']:>10.4f}\n")
        f.write(f"{'baseline':<18}{'':>10}{'':>10}{'':>10}"
                f"{report['baseline_mse']:>10.4f}\n")


def write_grasp_table(report, path_prefix):
    with open(path_prefix + ".csv", "w") as f:
        f.write("model,split,mse\n")
        f.write(f"gaussian,test,{report['gaussian_mse']:.6f}\n")
        f.write(f"vmf,test,{report['vmf_mse']:.6f}\n")
        f.write(f"baseline,test,{report['baseline_mse']:.6f}\n")
    with open(path_prefix + ".txt", "w") as f:
        f.write("Graspability models (test MSE, 1 s before grasp)\n")
        for name in ("gaussian", "vmf", "baseline"):
            f.write(f"{name:<10}{report[name + '_mse']:>10.4f}\n")


def write_valid_region_csv(report, path):
    offsets = sorted(next(iter(report.values())), reverse=True)
    with open(path, "w") as f:
        f.write("variant," + ",".join(f"t{o:g}s" for o in offsets) + "\n")
        for variant, rates in report.items():
            f.write(variant + "," +
                    ",".join(f"{rates[o]:.4f}" for o in offsets) + "\n")


def write_motion_table(report, path_prefix):
    table = report["table"]
    with open(path_prefix + ".csv", "w") as f:
        f.write("method,metric," +
                ",".join(f"ms{o}" for o in tj.EVAL_OFFSETS_MS) + "\n")
        for method, metrics in table.items():
            for metric in ("body", "wrist"):
                f.write(f"{method},{metric}," + ",".join(
                    f"{metrics[metric][o]:.4f}" for o in tj.EVAL_OFFSETS_MS)
                    + "\n")
    with open(path_prefix + ".txt", "w") as f:
        f.write(f"Per-timestep prediction error "
                f"({report['episodes']} episodes, {report['skipped']} skipped)\n")
        f.write(f"{'method':<15}{'metric':<8}" +
                "".join(f"{o:>8}" for o in tj.EVAL_OFFSETS_MS) + "\n")
        for method, metrics in table.items():
            for metric in ("body", "wrist"):
                f.write(f"{method:<15}{metric:<8}" + "".join(
                    f"{metrics[metric][o]:>8.3f}" for o in tj.EVAL_OFFSETS_MS)
                    + "\n")


def write_metrics_csv(bundle, path):
    with open(path, "w") as f:
        f.write("variant,epoch,split,nll,mse\n")
        for name, curve in bundle.curves.items():
            for epoch, value in enumerate(curve):
                f.write(f"{name},{epoch},train,{value:.6f},\n")
        for variant, m in bundle.place_metrics.items():
            for split in ("train", "test"):
                f.write(f"place/{variant},final,{split},"
                        f"{m[split]['nll']:.6f},{m[split]['mse']:.6f}\n")
        for posterior, m in bundle.grasp_metrics.items():
            for split in ("train", "test"):
                f.write(f"grasp/{posterior},final,{split},,"
                        f"{m[split]['mse']:.6f}\n")


def export_heatmaps(model, episode, path_prefix, offsets=(4.0, 1.0, 0.5)):
    """Pre-place mixture density heatmaps (PGM + CSV) for one episode."""
    place = [e for e in episode.events if e.kind == "place"][0]
    paths = []
    for offset in offsets:
        qf = episode.frame_at(place.time - offset)
        if qf - ds.OBS_FRAMES + 1 < 0:
            continue
        traj, _ = ds._traj_window(episode, qf)
        onehot = sc.onehot_code(episode.target_type, "table")
        features = sc.plane_feature_stack(gen.TABLE, episode.objects).stack()
        dist = af.placeability_predict(model, traj, onehot, features[None])[0]
        prefix = f"{path_prefix}_t{offset:g}s"
        dn.export_heatmap(dist, gen.TABLE.extent, prefix)
        paths.append(prefix)
    return paths
