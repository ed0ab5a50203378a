"""Task dataset extraction from generated episodes.

Placeability pairs are sampled at fixed offsets before each place
event, graspability pairs at one second before each grasp, autoencoder
pairs pair the pre-placement feature grid with the post-placement
occupancy, and predictor windows tile each episode with a fixed
stride.  Events too close to the episode start (not enough observed
history) are skipped and counted.
"""

from __future__ import annotations

import numpy as np

from .. import affordance as af
from .. import scene as sc
from .. import trajopt as tj
from . import generator as gen

PLACE_OFFSETS = (4.0, 3.0, 2.0, 1.0, 0.5)
GRASP_OFFSET = 1.0
WINDOW = 50  # 20 observed + 30 predicted frames
STRIDE = 10
OBS_FRAMES = 20


def _traj_window(episode, query_frame):
    """(840,) pelvis-normalized 20-frame window ending at query_frame."""
    lo = query_frame - OBS_FRAMES + 1
    joints = episode.joints[lo:query_frame + 1]  # (20, 13, 3)
    obj = episode.object_track[lo:query_frame + 1][:, None, :]  # (20, 1, 3)
    window = np.concatenate([joints, obj], axis=1)  # (20, 14, 3)
    pelvis = episode.joints[query_frame, sc.PELVIS]
    return (window - pelvis).reshape(af.TRAJ_DIM), pelvis


def extract_placeability(episodes):
    rows = {f: [] for f in ("traj", "onehot", "features", "label", "cell_size",
                            "half_extent", "radius", "offset", "persona",
                            "pelvis_plane")}
    skipped = 0
    plane = gen.TABLE
    for ep in episodes:
        stack = sc.plane_feature_stack(plane, ep.objects).stack()
        for event in ep.events:
            if event.kind != "place":
                continue
            label = plane.to_plane_frame(np.asarray(event.point[:2]))
            radius = max(gen.OBJECT_EXTENTS[ep.target_type])
            for offset in PLACE_OFFSETS:
                qf = ep.frame_at(event.time - offset)
                if qf - OBS_FRAMES + 1 < 0:
                    skipped += 1
                    continue
                traj, pelvis = _traj_window(ep, qf)
                rows["traj"].append(traj)
                rows["onehot"].append(sc.onehot_code(ep.target_type, "table"))
                rows["features"].append(stack)
                rows["label"].append(label)
                rows["cell_size"].append(plane.cell_size)
                rows["half_extent"].append(np.asarray(plane.extent) / 2)
                rows["radius"].append(radius)
                rows["offset"].append(offset)
                rows["persona"].append(ep.persona)
                rows["pelvis_plane"].append(plane.to_plane_frame(pelvis[:2]))
    data = af.PlaceabilitySet(**{k: np.array(v) for k, v in rows.items()})
    return data, skipped


def extract_graspability(episodes):
    rows = {f: [] for f in ("traj", "onehot", "obj_rel", "wrist_rel",
                            "direction", "distance", "object_pos", "wrist_now",
                            "pelvis", "wrist_label", "object_type", "surface",
                            "persona")}
    skipped = 0
    for ep in episodes:
        for event in ep.events:
            if event.kind != "grasp":
                continue
            qf = ep.frame_at(event.time - GRASP_OFFSET)
            if qf - OBS_FRAMES + 1 < 0:
                skipped += 1
                continue
            traj, pelvis = _traj_window(ep, qf)
            object_pos = ep.object_track[qf]
            wrist_label = np.asarray(event.point)
            diff = wrist_label - object_pos
            distance = float(np.linalg.norm(diff))
            rows["traj"].append(traj)
            rows["onehot"].append(sc.onehot_code(ep.target_type,
                                                 ep.source_surface))
            rows["obj_rel"].append(object_pos - pelvis)
            rows["wrist_rel"].append(wrist_label - pelvis)
            rows["direction"].append(diff / distance)
            rows["distance"].append(distance)
            rows["object_pos"].append(object_pos)
            rows["wrist_now"].append(ep.joints[qf, sc.R_WRIST])
            rows["pelvis"].append(pelvis)
            rows["wrist_label"].append(wrist_label)
            rows["object_type"].append(ep.target_type)
            rows["surface"].append(ep.source_surface)
            rows["persona"].append(ep.persona)
    data = af.GraspabilitySet(**{k: np.array(v) for k, v in rows.items()})
    return data, skipped


def extract_autoencoder(episodes):
    features, onehot, target = [], [], []
    plane = gen.TABLE
    for ep in episodes:
        for event in ep.events:
            if event.kind != "place":
                continue
            before = sc.plane_feature_stack(plane, ep.objects)
            placed = sc.SceneObject(
                "placed", ep.target_type, tuple(event.point), 0.0,
                gen.OBJECT_EXTENTS[ep.target_type])
            after = sc.rasterize_occupancy(plane, ep.objects + [placed])
            features.append(before.stack())
            onehot.append(sc.onehot_code(ep.target_type, "table"))
            target.append(after)
    return af.AutoencoderSet(features=np.array(features),
                             onehot=np.array(onehot),
                             target=np.array(target)), 0


def extract_predictor(episodes):
    windows = []
    for ep in episodes:
        flat = ep.joints.reshape(len(ep), tj.STATE_DIM)
        for lo in range(0, len(ep) - WINDOW + 1, STRIDE):
            windows.append(flat[lo:lo + WINDOW])
    return np.array(windows), 0


def extract_training_pairs(episodes, task):
    """(dataset, skipped_event_count) for one of the four tasks."""
    extractors = {"placeability": extract_placeability,
                  "graspability": extract_graspability,
                  "autoencoder": extract_autoencoder,
                  "predictor": extract_predictor}
    if task not in extractors:
        raise ValueError(f"unknown task {task!r}; expected {sorted(extractors)}")
    return extractors[task](episodes)


def prediction_problems(episodes):
    """Goal-constrained evaluation problems for place events.

    Each problem's future ends exactly at the place event, so the
    1500 ms offset row coincides with the placement moment.
    """
    problems = []
    for ep in episodes:
        for event in ep.events:
            if event.kind != "place":
                continue
            pf = ep.frame_at(event.time)
            lo = pf - tj.HORIZON - tj.OBSERVED_FRAMES + 1
            if lo < 0:
                continue
            flat = ep.joints.reshape(len(ep), tj.STATE_DIM)
            problems.append({
                "observed": flat[lo:lo + tj.OBSERVED_FRAMES],
                "future": flat[lo + tj.OBSERVED_FRAMES:pf + 1],
                "episode": ep,
                "event": event,
                "query_frame": lo + tj.OBSERVED_FRAMES - 1,
                "goals": {
                    "oracle": ep.joints[pf, sc.R_WRIST].copy(),
                },
            })
    return problems
