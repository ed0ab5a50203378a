"""Placeability and graspability affordance models.

Placeability predicts a 7-component 2-D mixture over place locations
on a support plane, conditioned on one second (20 frames) of skeleton
and held-object motion, a 14-dim object/surface code, and the 4-channel
plane feature grid.  Five variants share the trunk and differ in their
environment encoder and loss:

  plain             conv encoder, mixture NLL
  penalty           conv encoder, NLL + SDF hinge penalty on the means
  transfer          frozen pre-trained autoencoder encoder, NLL
  transfer-penalty  frozen encoder, NLL + penalty
  no-cnn            no environment features at all

Graspability predicts the right-wrist position for grasping a target
object, with either a diagonal Gaussian head (6 outputs) or a vMF
direction head plus distance (5 outputs).

Trunks are two 128-wide tanh layers; conv stages are 3x3 kernels with
8 then 16 channels and 2x2 maxpooling (24 -> 12 -> 6), followed by a
dense projection to a 32-dim latent.  Trajectory
inputs are translation-normalized to the pelvis at the last observed
frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import densities as dn
from . import scene as sc
from .autodiff import ParamStore, Tensor

TRAJ_DIM = 20 * 14 * 3  # 20 frames x (13 joints + held object) x 3
ENC_MAP = 6 * 6 * 16  # flattened conv map before the latent projection
ENC_DIM = 32
PLACE_VARIANTS = ("plain", "penalty", "transfer", "transfer-penalty", "no-cnn")
MDN_COMPONENTS = 7
TRUNK_WIDTH = 128
DEFAULT_PENALTY_WEIGHT = 1.0


class TrainingError(RuntimeError):
    """Divergence or unusable training inputs."""


class SurfaceFullError(RuntimeError):
    """No valid placement cell exists on the plane."""


class GraspStatsError(KeyError):
    """Missing (object type, surface) entry in the baseline stats table."""


@dataclass(frozen=True)
class AffordanceInput:
    traj: np.ndarray  # (20, 14, 3) pelvis-relative positions
    onehot: np.ndarray  # (14,) held/target object + surface code
    plane_features: object = None  # PlaneFeatureGrid, placeability only

    def __post_init__(self):
        traj = np.asarray(self.traj, dtype=float)
        onehot = np.asarray(self.onehot, dtype=float)
        if traj.shape != (20, 14, 3):
            raise ValueError(f"trajectory must be (20, 14, 3), got {traj.shape}")
        if onehot.shape != (sc.ONEHOT_DIM,) or int(onehot.sum()) != 2 or \
                set(np.unique(onehot)) - {0.0, 1.0}:
            raise ValueError("onehot must be a 14-dim code with exactly 2 ones")
        object.__setattr__(self, "traj", traj)
        object.__setattr__(self, "onehot", onehot)


# ---------------------------------------------------------------------------
# datasets (flat arrays; one row per training pair)


@dataclass
class PlaceabilitySet:
    traj: np.ndarray  # (N, 840)
    onehot: np.ndarray  # (N, 14)
    features: np.ndarray  # (N, 24, 24, 4)
    label: np.ndarray  # (N, 2) place point, plane frame
    cell_size: np.ndarray  # (N, 2)
    half_extent: np.ndarray  # (N, 2)
    radius: np.ndarray  # (N,) object clearance radius, meters
    offset: np.ndarray  # (N,) seconds before the place event
    persona: np.ndarray  # (N,)
    pelvis_plane: np.ndarray  # (N, 2) pelvis in plane frame at query time

    def __len__(self):
        return len(self.label)

    @property
    def sdf(self):
        return self.features[..., 3]

    def subset(self, idx):
        return PlaceabilitySet(*(getattr(self, f)[idx] for f in (
            "traj", "onehot", "features", "label", "cell_size",
            "half_extent", "radius", "offset", "persona", "pelvis_plane")))


@dataclass
class AutoencoderSet:
    features: np.ndarray  # (N, 24, 24, 4)
    onehot: np.ndarray  # (N, 14)
    target: np.ndarray  # (N, 24, 24) post-placement occupancy

    def __len__(self):
        return len(self.target)


@dataclass
class GraspabilitySet:
    traj: np.ndarray  # (N, 840)
    onehot: np.ndarray  # (N, 14)
    obj_rel: np.ndarray  # (N, 3) target object, pelvis-relative
    wrist_rel: np.ndarray  # (N, 3) label wrist, pelvis-relative
    direction: np.ndarray  # (N, 3) unit object -> wrist
    distance: np.ndarray  # (N,)
    object_pos: np.ndarray  # (N, 3) world
    wrist_now: np.ndarray  # (N, 3) world wrist at query time
    pelvis: np.ndarray  # (N, 3) world pelvis at query time
    wrist_label: np.ndarray  # (N, 3) world wrist at grasp
    object_type: np.ndarray  # (N,) strings
    surface: np.ndarray  # (N,) strings
    persona: np.ndarray  # (N,)

    def __len__(self):
        return len(self.distance)


# ---------------------------------------------------------------------------
# model containers and assembly


@dataclass
class PlaceabilityModel:
    variant: str
    store: ParamStore
    m: int = MDN_COMPONENTS

    @property
    def uses_cnn(self):
        return self.variant != "no-cnn"


@dataclass
class GraspabilityModel:
    posterior: str  # "gaussian" or "vmf"
    store: ParamStore


def _add_encoder(store, rng, trainable=True):
    store.conv_layer("enc/c1", 3, 3, 4, 8, rng, trainable)
    store.conv_layer("enc/c2", 3, 3, 8, 16, rng, trainable)
    store.dense_layer("enc/proj", ENC_MAP, ENC_DIM, rng, trainable)


# per-channel input scales for the occupancy stack (occ, pos_x, pos_y, sdf):
# the signed distance channel is in cell units with magnitudes up to the
# grid size, which would otherwise swamp the O(1) channels and saturate
# the downstream tanh trunk
FEATURE_SCALE = np.array([1.0, 1.0, 1.0, 1.0 / sc.GRID])


def _encode(store, features):
    x = features if isinstance(features, Tensor) else Tensor(features)
    x = ad.mul(x, Tensor(FEATURE_SCALE))
    x = ad.maxpool2(ad.relu(ad.add(ad.conv2d_same(x, store["enc/c1/k"]),
                                   store["enc/c1/b"])))
    x = ad.maxpool2(ad.relu(ad.add(ad.conv2d_same(x, store["enc/c2/k"]),
                                   store["enc/c2/b"])))
    x = ad.reshape(x, (x.values.shape[0], ENC_MAP))
    # learned low-dimensional latent: the raw 6x6 map has enough degrees of
    # freedom for the downstream trunk to memorize individual scenes
    return ad.tanh(ad.dense(x, store["enc/proj/w"], store["enc/proj/b"]))


def _add_trunk(store, rng, n_in, n_out):
    store.dense_layer("trunk/l1", n_in, TRUNK_WIDTH, rng)
    store.dense_layer("trunk/l2", TRUNK_WIDTH, TRUNK_WIDTH, rng)
    store.dense_layer("trunk/out", TRUNK_WIDTH, n_out, rng)


def _trunk(store, x):
    h = ad.tanh(ad.dense(x, store["trunk/l1/w"], store["trunk/l1/b"]))
    h = ad.tanh(ad.dense(h, store["trunk/l2/w"], store["trunk/l2/b"]))
    return ad.dense(h, store["trunk/out/w"], store["trunk/out/b"])


def assemble_placeability(variant, encoder_store=None, seed=0):
    if variant not in PLACE_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected {PLACE_VARIANTS}")
    rng = np.random.default_rng(seed)
    store = ParamStore()
    n_in = TRAJ_DIM + sc.ONEHOT_DIM
    if variant in ("transfer", "transfer-penalty"):
        if encoder_store is None or "enc/c1/k" not in encoder_store:
            raise TrainingError(f"variant {variant!r} requires a pre-trained encoder")
        store.merge_from(encoder_store, prefix="enc/", trainable=False)
        n_in += ENC_DIM
    elif variant in ("plain", "penalty"):
        _add_encoder(store, rng)
        n_in += ENC_DIM
    _add_trunk(store, rng, n_in, 5 * MDN_COMPONENTS)
    return PlaceabilityModel(variant=variant, store=store)


def placeability_forward(model, traj, onehot, features=None):
    """Raw mixture head outputs (N, 5m) as a tape tensor."""
    parts = [Tensor(np.atleast_2d(traj)), Tensor(np.atleast_2d(onehot))]
    if model.uses_cnn:
        parts.append(_encode(model.store, np.asarray(features).reshape(-1, 24, 24, 4)))
    return _trunk(model.store, ad.concat(parts, axis=-1))


def placeability_predict(model, traj, onehot, features=None):
    raw = placeability_forward(model, traj, onehot, features).values
    return [dn.mdn_head(r) for r in raw]


def placeability_loss(model, data, idx=None, penalty_weight=DEFAULT_PENALTY_WEIGHT):
    """Scalar training loss over (a subset of) a PlaceabilitySet.

    Plain/transfer variants: mixture NLL.  Penalty variants add
    lambda_p * mean_i min(max(0, r_c - sdf(mu_i)), r_c + 2)^2 with the
    clearance r_c in cell units, differentiated through the bilinear
    SDF lookup.  The
    hinge is deliberately independent of the mixture weights: weighting
    by alpha lets the optimizer satisfy the penalty by silencing the
    offending component instead of moving it, which corrupts mode
    selection; the unweighted mean only ever relocates means.
    """
    d = data if idx is None else data.subset(idx)
    raw = placeability_forward(model, d.traj, d.onehot, d.features)
    loss = dn.mdn_nll_graph(raw, d.label)
    if model.variant in ("penalty", "transfer-penalty"):
        _, mu = dn.mdn_alpha_mu_graph(raw)
        inv_cell = 1.0 / d.cell_size
        uv = ad.sub(ad.mul(ad.add(mu, Tensor(d.half_extent[:, None, :])),
                           Tensor(inv_cell[:, None, :])), 0.5)
        sdf_vals = ad.bilinear2d(d.sdf, uv)
        r_cells = d.radius / d.cell_size.min(axis=1)
        hinge = ad.relu(ad.sub(Tensor(r_cells[:, None]), sdf_vals))
        # cap the hinge depth: a mean deep inside clutter gets a bounded
        # push, so it climbs out locally instead of being flung across the
        # plane into an unrelated free region
        cap = r_cells[:, None] + 2.0
        hinge = ad.sub(Tensor(cap), ad.relu(ad.sub(Tensor(cap), hinge)))
        pen = ad.mean(ad.mean(ad.mul(hinge, hinge), axis=-1))
        loss = ad.add(loss, ad.mul(pen, penalty_weight))
    return loss


def _check_finite(loss, epoch):
    if not np.isfinite(loss):
        raise TrainingError(f"training diverged at epoch {epoch}: loss={loss}")


def train_placeability(model, train, test, epochs, lr=1e-3, seed=0, batch=32,
                       penalty_weight=DEFAULT_PENALTY_WEIGHT):
    """Adam training; returns per-epoch train NLL curve and final metrics."""
    if len(train) == 0:
        raise TrainingError("empty training set")
    rng = np.random.default_rng(seed)
    curve = []
    ramp = max(epochs // 2, 1)
    for epoch in range(epochs):
        # the hinge penalty ramps in over the first half of training, so the
        # mixture first locks onto the labels and is then pushed clear of
        # occupied space instead of collapsing to a safe corner early on
        weight = penalty_weight * min(1.0, epoch / ramp)
        order = rng.permutation(len(train))
        total, count = 0.0, 0
        for lo in range(0, len(order), batch):
            idx = order[lo:lo + batch]
            loss = placeability_loss(model, train, idx, weight)
            _check_finite(loss.item(), epoch)
            model.store.zero_grad()
            ad.backward(loss)
            model.store.adam_step(lr)
            total += loss.item() * len(idx)
            count += len(idx)
        curve.append(total / count)
    metrics = {"train": evaluate_placeability(model, train),
               "test": evaluate_placeability(model, test)}
    return curve, metrics


def evaluate_placeability(model, data, batch=256):
    """Mean NLL and MSE (predicted placement vs ground truth) over a set.

    The predicted placement is the mean of the most probable mixture
    component, matching the point scored by ``valid_region_rate``; the
    full-mixture expectation is reported alongside as ``mse_expected``.
    """
    nll, se, se_exp = [], [], []
    for lo in range(0, len(data), batch):
        idx = np.arange(lo, min(lo + batch, len(data)))
        d = data.subset(idx)
        for dist, label in zip(
                placeability_predict(model, d.traj, d.onehot, d.features), d.label):
            nll.append(dn.mdn_nll(dist, label))
            point = dist.mu[dn.mdn_top_component(dist)]
            se.append(((point - label) ** 2).sum())
            se_exp.append(((dn.mdn_expected(dist) - label) ** 2).sum())
    return {"nll": float(np.mean(nll)), "mse": float(np.mean(se)),
            "mse_expected": float(np.mean(se_exp))}


# ---------------------------------------------------------------------------
# occupancy autoencoder (transfer-learning pre-training)


def build_autoencoder(seed=0):
    rng = np.random.default_rng(seed)
    store = ParamStore()
    _add_encoder(store, rng)
    store.dense_layer("dec/latent", ENC_DIM + sc.ONEHOT_DIM, ENC_MAP, rng)
    store.conv_layer("dec/c1", 3, 3, 16, 16, rng)
    store.conv_layer("dec/c2", 3, 3, 16, 8, rng)
    store.conv_layer("dec/c3", 3, 3, 8, 1, rng)
    return store


def autoencoder_forward(store, features, onehot):
    """Predicted post-placement occupancy (N, 24, 24), values in (0, 1)."""
    latent = _encode(store, features)
    mixed = ad.relu(ad.dense(ad.concat([latent, Tensor(np.atleast_2d(onehot))],
                                       axis=-1),
                             store["dec/latent/w"], store["dec/latent/b"]))
    x = ad.reshape(mixed, (-1, 6, 6, 16))
    x = ad.upsample2_nearest(x)
    x = ad.relu(ad.add(ad.conv2d_same(x, store["dec/c1/k"]), store["dec/c1/b"]))
    x = ad.upsample2_nearest(x)
    x = ad.relu(ad.add(ad.conv2d_same(x, store["dec/c2/k"]), store["dec/c2/b"]))
    x = ad.sigmoid(ad.add(ad.conv2d_same(x, store["dec/c3/k"]), store["dec/c3/b"]))
    return ad.reshape(x, (-1, 24, 24))


def encode_features(store, features):
    """Deterministic latent for a batch of feature stacks (forward only)."""
    return _encode(store, np.asarray(features).reshape(-1, 24, 24, 4)).values


def train_occupancy_autoencoder(dataset, epochs, seed=0, lr=1e-3, batch=32):
    """Train encoder+decoder on post-placement occupancy reconstruction.

    Returns (store, per-epoch MSE curve); the placeability transfer
    variants consume the "enc/" parameters of the returned store.
    """
    if len(dataset) == 0:
        raise TrainingError("empty autoencoder dataset")
    store = build_autoencoder(seed)
    rng = np.random.default_rng(seed)
    curve = []
    for epoch in range(epochs):
        order = rng.permutation(len(dataset))
        total, count = 0.0, 0
        for lo in range(0, len(order), batch):
            idx = order[lo:lo + batch]
            pred = autoencoder_forward(store, dataset.features[idx],
                                       dataset.onehot[idx])
            diff = ad.sub(pred, Tensor(dataset.target[idx]))
            loss = ad.mean(ad.mul(diff, diff))
            _check_finite(loss.item(), epoch)
            store.zero_grad()
            ad.backward(loss)
            store.adam_step(lr)
            total += loss.item() * len(idx)
            count += len(idx)
        curve.append(total / count)
    return store, curve


# ---------------------------------------------------------------------------
# graspability


def assemble_graspability(posterior, seed=0):
    if posterior not in ("gaussian", "vmf"):
        raise ValueError(f"unknown posterior {posterior!r}")
    rng = np.random.default_rng(seed)
    store = ParamStore()
    n_out = 6 if posterior == "gaussian" else 5
    _add_trunk(store, rng, TRAJ_DIM + sc.ONEHOT_DIM + 3, n_out)
    return GraspabilityModel(posterior=posterior, store=store)


def graspability_forward(model, traj, onehot, obj_rel):
    x = ad.concat([Tensor(np.atleast_2d(traj)), Tensor(np.atleast_2d(onehot)),
                   Tensor(np.atleast_2d(obj_rel))], axis=-1)
    return _trunk(model.store, x)


def graspability_predict_points(model, data, idx=None):
    """World-frame 3D prediction points for MSE evaluation."""
    if idx is None:
        idx = np.arange(len(data))
    raw = graspability_forward(model, data.traj[idx], data.onehot[idx],
                               data.obj_rel[idx]).values
    points = np.zeros((len(idx), 3))
    for row, (r, i) in enumerate(zip(raw, idx)):
        if model.posterior == "gaussian":
            points[row] = dn.gaussian_head(r).mu + data.pelvis[i]
        else:
            dist, d = dn.vmf_head(r)
            points[row] = dn.vmf_point(data.object_pos[i], dist, d)
    return points


def _reflect_grasp_set(data):
    """Mirror a GraspabilitySet about the x-z plane (y negated)."""
    flip3 = np.array([1.0, -1.0, 1.0])
    traj = data.traj.reshape(-1, 20, 14, 3) * flip3
    return GraspabilitySet(
        traj=traj.reshape(-1, TRAJ_DIM), onehot=data.onehot.copy(),
        obj_rel=data.obj_rel * flip3, wrist_rel=data.wrist_rel * flip3,
        direction=data.direction * flip3, distance=data.distance.copy(),
        object_pos=data.object_pos * flip3, wrist_now=data.wrist_now * flip3,
        pelvis=data.pelvis * flip3, wrist_label=data.wrist_label * flip3,
        object_type=data.object_type.copy(), surface=data.surface.copy(),
        persona=data.persona.copy())


def _concat_grasp_sets(a, b):
    fields = ("traj", "onehot", "obj_rel", "wrist_rel", "direction", "distance",
              "object_pos", "wrist_now", "pelvis", "wrist_label",
              "object_type", "surface", "persona")
    return GraspabilitySet(*(np.concatenate([getattr(a, f), getattr(b, f)])
                             for f in fields))


def train_graspability(model, train, test, epochs, lr=1e-3, seed=0, batch=32,
                       lambda_d=1.0, augment_reflect=False):
    """Train a graspability posterior; returns (curve, metrics).

    Metrics report the MSE between the predicted 3D point (Gaussian
    mean, or object + distance * vMF mean direction) and the true wrist.
    """
    if len(train) == 0:
        raise TrainingError("empty training set")
    if augment_reflect:
        train = _concat_grasp_sets(train, _reflect_grasp_set(train))
    rng = np.random.default_rng(seed)
    curve = []
    for epoch in range(epochs):
        order = rng.permutation(len(train))
        total, count = 0.0, 0
        for lo in range(0, len(order), batch):
            idx = order[lo:lo + batch]
            raw = graspability_forward(model, train.traj[idx], train.onehot[idx],
                                       train.obj_rel[idx])
            if model.posterior == "gaussian":
                loss = dn.gaussian_nll_graph(raw, train.wrist_rel[idx])
            else:
                loss = dn.vmf_loss_graph(raw, train.direction[idx],
                                         train.distance[idx], lambda_d)
            _check_finite(loss.item(), epoch)
            model.store.zero_grad()
            ad.backward(loss)
            model.store.adam_step(lr)
            total += loss.item() * len(idx)
            count += len(idx)
        curve.append(total / count)
    metrics = {"train": evaluate_graspability(model, train),
               "test": evaluate_graspability(model, test)}
    return curve, metrics


def evaluate_graspability(model, data):
    points = graspability_predict_points(model, data)
    return {"mse": float(((points - data.wrist_label) ** 2).sum(axis=1).mean())}


# ---------------------------------------------------------------------------
# heuristic baselines and the valid-region metric


def place_baseline(plane, objects, pelvis_xy, object_radius):
    """Closest valid cell center to the human's plane-frame projection."""
    grid = sc.plane_feature_stack(plane, objects)
    xs, ys = plane.cell_centers()
    rel = plane.to_plane_frame(np.asarray(pelvis_xy, dtype=float))
    best, best_d = None, np.inf
    for i in range(sc.GRID):
        for j in range(sc.GRID):
            p = (xs[i], ys[j])
            if not sc.is_valid_placement(p, plane, objects, object_radius,
                                         grid=grid):
                continue
            d = float(np.hypot(p[0] - rel[0], p[1] - rel[1]))
            if d < best_d:
                best, best_d = np.array(p), d
    if best is None:
        raise SurfaceFullError(
            f"no valid cell on {plane.surface_type} at radius {object_radius}")
    return best


def baseline_place_mse(data):
    """MSE of the SDF-heuristic placement baseline over a PlaceabilitySet."""
    se = []
    for i in range(len(data)):
        plane = sc.SupportPlane("table", (0.0, 0.0),
                                tuple(2 * data.half_extent[i]), 0.0)
        grid = sc.PlaneFeatureGrid(
            occupancy=data.features[i, ..., 0], pos_x=data.features[i, ..., 1],
            pos_y=data.features[i, ..., 2], sdf=data.features[i, ..., 3],
            cell_size=tuple(data.cell_size[i]))
        point = _place_baseline_on_grid(grid, plane, data.pelvis_plane[i],
                                        data.radius[i])
        se.append(((point - data.label[i]) ** 2).sum())
    return float(np.mean(se))


def _place_baseline_on_grid(grid, plane, pelvis_plane_xy, radius):
    xs, ys = plane.cell_centers()
    best, best_d = None, np.inf
    w, d_ = plane.extent
    r_cells = sc.clearance_cells(radius, grid.cell_size)
    for i in range(sc.GRID):
        for j in range(sc.GRID):
            p = (xs[i], ys[j])
            if abs(p[0]) > w / 2 - radius or abs(p[1]) > d_ / 2 - radius:
                continue
            if sc.sdf_bilinear(grid, p) < r_cells:
                continue
            dd = float(np.hypot(p[0] - pelvis_plane_xy[0], p[1] - pelvis_plane_xy[1]))
            if dd < best_d:
                best, best_d = np.array(p), dd
    if best is None:
        raise SurfaceFullError("surface full")
    return best


def valid_region_rate(model, data, clearance=None, batch=256):
    """Fraction of predicted placements in the valid region, per offset.

    The predicted placement is the mean of the most probable mixture
    component: when the posterior is still multimodal (e.g. several
    candidate seats), the weighted average of the modes falls between
    them and is not a placement anyone would choose.

    ``data`` is a PlaceabilitySet whose ``offset`` column holds seconds
    before the place event; clearance defaults to each sample's object
    radius.
    """
    offsets = np.unique(data.offset)
    hits = {o: [] for o in offsets}
    for lo in range(0, len(data), batch):
        idx = np.arange(lo, min(lo + batch, len(data)))
        d = data.subset(idx)
        dists = placeability_predict(model, d.traj, d.onehot, d.features)
        for k, dist in enumerate(dists):
            point = dist.mu[dn.mdn_top_component(dist)]
            r = d.radius[k] if clearance is None else clearance
            plane = sc.SupportPlane("table", (0.0, 0.0),
                                    tuple(2 * d.half_extent[k]), 0.0)
            grid = sc.PlaneFeatureGrid(
                occupancy=d.features[k, ..., 0], pos_x=d.features[k, ..., 1],
                pos_y=d.features[k, ..., 2], sdf=d.features[k, ..., 3],
                cell_size=tuple(d.cell_size[k]))
            ok = sc.is_valid_placement(point, plane, [], r, grid=grid)
            hits[d.offset[k]].append(ok)
    return {float(o): float(np.mean(v)) for o, v in hits.items()}


def compute_grasp_stats(data):
    """Mean wrist-object distance per (object type, surface) combination."""
    table = {}
    for key in set(zip(data.object_type, data.surface)):
        mask = (data.object_type == key[0]) & (data.surface == key[1])
        dists = np.linalg.norm(data.wrist_label[mask] - data.object_pos[mask],
                               axis=1)
        table[key] = float(dists.mean())
    return table


def grasp_baseline(stats, object_type, surface, object_pos, wrist_now):
    """object position + mean distance along the current wrist direction."""
    key = (object_type, surface)
    if key not in stats:
        raise GraspStatsError(f"no stats for combination {key}")
    direction = np.asarray(wrist_now, dtype=float) - np.asarray(object_pos, dtype=float)
    norm = np.linalg.norm(direction)
    if norm > 0:
        direction = direction / norm
    return np.asarray(object_pos, dtype=float) + stats[key] * direction


def baseline_grasp_mse(stats, data):
    se = []
    for i in range(len(data)):
        point = grasp_baseline(stats, data.object_type[i], data.surface[i],
                               data.object_pos[i], data.wrist_now[i])
        se.append(((point - data.wrist_label[i]) ** 2).sum())
    return float(np.mean(se))
