# Calibration scratchpad (not part of the deliverable): establishes the
# empirical fixture behavior before test values are frozen.
import time

import numpy as np

from unlearnlab import nn, data, unlearn, metrics

t_all = time.perf_counter()

# 1. gradient check on tiny net
net = nn.init_random([2, 4, 2], seed=3)
rng = np.random.default_rng(0)
X = rng.normal(size=(1, 2))
y = np.array([1])
rec = nn.backward(net, X, y)
vec = nn.flatten_params(net)
h = 1e-5
errs = []
for i in range(vec.size):
    vp = vec.copy(); vp[i] += h
    vm = vec.copy(); vm[i] -= h
    np_ = net.copy(); nn.assign_params(np_, vp)
    nm = net.copy(); nn.assign_params(nm, vm)
    fd = (nn.cross_entropy(np_, X, y) - nn.cross_entropy(nm, X, y)) / (2 * h)
    errs.append(abs(fd - rec.grads[i]) / max(abs(fd), 1e-8))
print("grad check max rel err:", max(errs))

# 2. blobs fixture: train source, check memorization + held-out
t0 = time.perf_counter()
ds = data.generate_blobs(10, 500, 32, 0.5, seed=1234)
print("blob feature stats:", ds.features.mean(), ds.features.std())

cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=200, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)
net0 = nn.init_random([32, 64, 64, 10], seed=0)
src, epochs, trace = unlearn.train_source(net0, ds, cfg_train, seed=0)
t_train = time.perf_counter() - t0
acc_train = metrics.accuracy(src, ds.features, ds.labels)
print(f"source: epochs={epochs} train_acc={acc_train:.4f} time={t_train:.1f}s")

# held-out check: train on 80%, eval 20%
ho = data.generate_blobs(10, 625, 32, 0.5, seed=77)
cut = 5000
net_ho = nn.init_random([32, 64, 64, 10], seed=1)
ds_tr = data.Dataset(ho.features[:cut], ho.labels[:cut], 10, "standardized")
src_ho, ep_ho, _ = unlearn.train_source(net_ho, ds_tr, cfg_train, seed=1)
acc_ho = metrics.accuracy(src_ho, ho.features[cut:], ho.labels[cut:])
print(f"held-out acc={acc_ho:.4f} (epochs {ep_ho})")

# 3. unlearning dynamics at ratio 0.05, seed 0
sp = data.split(ds, 0.05, 0)
X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
X_re, y_re = ds.features[sp.remain_indices], ds.labels[sp.remain_indices]
acc_ul_before = metrics.accuracy(src, X_ul, y_ul)
acc_re_before = metrics.accuracy(src, X_re, y_re)
print(f"before: acc_ul={acc_ul_before:.4f} acc_re={acc_re_before:.4f}")

probe = unlearn.pick_sensitivity_sample(ds, 0)
sens = unlearn.sensitivity(src, ds.features[probe:probe+1], ds.labels[probe:probe+1])
plan = unlearn.select_top_k(sens, 45, 0.05)
ucfg = unlearn.UnlearnConfig()
t0 = time.perf_counter()
out_tk = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=0)
print(f"top-k: epochs={out_tk.epochs_run} acc_ul={out_tk.acc_ul:.4f} "
      f"acc_re={out_tk.acc_re:.4f} time={out_tk.wall_time_s:.2f}s "
      f"per-epoch={out_tk.wall_time_s/out_tk.epochs_run:.3f}s")

plan_rk = unlearn.select_random_k(nn.param_count(src), 0.05, 0, 0.05)
out_rk = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan_rk, seed=0)
print(f"random-k: epochs={out_rk.epochs_run} acc_ul={out_rk.acc_ul:.4f} "
      f"acc_re={out_rk.acc_re:.4f} time={out_rk.wall_time_s:.2f}s "
      f"per-epoch={out_rk.wall_time_s/out_rk.epochs_run:.3f}s")

bcfg = unlearn.UnlearnConfig(lam=0.0, learning_rate=1e-3, max_epochs=100)
out_rt = unlearn.run_baseline("retrain", src, ds, sp, bcfg, seed=0)
print(f"retrain: epochs={out_rt.epochs_run} acc_ul={out_rt.acc_ul:.4f} "
      f"acc_re={out_rt.acc_re:.4f} time={out_rt.wall_time_s:.2f}s "
      f"per-epoch={out_rt.wall_time_s/out_rt.epochs_run:.3f}s")

# warm start
store = nn.ParameterStore.from_network(src)
pert = unlearn.perturb(store, plan)
net_p = src.copy(); pert.apply_to(net_p)
ce_p = nn.cross_entropy(net_p, X_re, y_re)
ce_r = nn.cross_entropy(nn.init_random(src.dims(), 99), X_re, y_re)
print(f"warm-start: ce(perturbed)={ce_p:.4f} ce(random)={ce_r:.4f}")

# gradient norm gap before/after
gap_before = unlearn.gradient_norm_gap(src, ds, sp)
gap_after = unlearn.gradient_norm_gap(out_tk.model, ds, sp)
print(f"grad-norm gap: before={gap_before:.5f} after={gap_after:.5f}")

# 4. sensitivity Spearman on tiny trained net
small = data.generate_blobs(3, 40, 6, 0.5, seed=5)
tiny0 = nn.init_random([6, 4, 3], seed=2)  # 6*4+4 + 4*3+3 = 43 params
tiny_cfg = unlearn.UnlearnConfig(lam=0.0, max_epochs=120, batch_size=16,
                                 learning_rate=5e-3, patience=10, min_delta=0.0005)
tiny, _, _ = unlearn.train_source(tiny0, small, tiny_cfg, seed=2)
print("tiny train acc:", metrics.accuracy(tiny, small.features, small.labels))
xs = small.features[:1]; ys_ = small.labels[:1]
smap = unlearn.sensitivity(tiny, xs, ys_)
vec_t = nn.flatten_params(tiny)
eps = 0.05
brute = np.zeros(vec_t.size)
base_ce = nn.cross_entropy(tiny, xs, ys_)
for i in range(vec_t.size):
    vp = vec_t.copy(); vp[i] += eps * vp[i]
    tp = tiny.copy(); nn.assign_params(tp, vp)
    brute[i] = abs(nn.cross_entropy(tp, xs, ys_) - base_ce)


def spearman(a, b):
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    ra -= ra.mean(); rb -= rb.mean()
    return float((ra * rb).sum() / np.sqrt((ra**2).sum() * (rb**2).sum()))


print("spearman(|grad|, |CE change under (1+eps) bump|):", spearman(smap.scores, brute))
# alternative oracle: L2 norm of probability change
brute2 = np.zeros(vec_t.size)
base_p = nn.forward(tiny, xs)
for i in range(vec_t.size):
    vp = vec_t.copy(); vp[i] += eps * vp[i]
    tp = tiny.copy(); nn.assign_params(tp, vp)
    brute2[i] = np.linalg.norm(nn.forward(tp, xs) - base_p)
print("spearman(|grad|, ||prob change||):", spearman(smap.scores, brute2))

# 5. spread->0: 100% train acc config hunt
for seed in range(6):
    tiny_ds = data.generate_blobs(4, 25, 16, 1e-6, seed=seed)
    n0 = nn.init_random([16, 32, 4], seed=seed)
    c = unlearn.UnlearnConfig(lam=0.0, max_epochs=50, batch_size=16,
                              learning_rate=1e-2, patience=50, min_delta=1.0)
    tr, ep, at = unlearn.train_source(n0, tiny_ds, c, seed=seed)
    best = max(a[0] for a in at)
    print(f"spread 1e-6 seed={seed}: best train acc {best:.3f} over {ep} epochs")

print(f"TOTAL {time.perf_counter()-t_all:.1f}s")
