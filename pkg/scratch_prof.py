# Per-phase timing breakdown: masked vs full backward, JS leg, optimizer.
import time

import numpy as np

from unlearnlab import nn, data, unlearn
from unlearnlab.optim import make_optimizer, optimizer_step


def make_blobs(class_count, per_class, dims, spread, seed, sigma_factor):
    rng = np.random.default_rng(seed)
    d_ = rng.normal(size=(class_count, dims))
    d_ /= np.linalg.norm(d_, axis=1, keepdims=True)
    centers = 4.0 * spread * d_
    labels = np.repeat(np.arange(class_count), per_class)
    feats = centers[labels] + rng.normal(scale=sigma_factor * spread,
                                         size=(labels.size, dims))
    order = rng.permutation(labels.size)
    feats, labels = feats[order], labels[order]
    feats = (feats - feats.mean(0)) / feats.std(0)
    return data.Dataset(feats, labels, class_count, scaling="standardized")


ds = make_blobs(10, 500, 32, 0.5, 1234, 1.2)
cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=60, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)
net0 = nn.init_random([32, 32, 24, 10], seed=0)
src, _, _ = unlearn.train_source(net0, ds, cfg_train, seed=0)

sp = data.split(ds, 0.05, 0)
X_re = ds.features[sp.remain_indices]; y_re = ds.labels[sp.remain_indices]
X_ul = ds.features[sp.unlearn_indices]; y_ul = ds.labels[sp.unlearn_indices]
probe = unlearn.pick_sensitivity_sample(ds, 0)
sens = unlearn.sensitivity(src, ds.features[probe:probe+1], ds.labels[probe:probe+1])
plan_tk = unlearn.select_top_k(sens, 45, 1.0)
plan_rk = unlearn.select_random_k(nn.param_count(src), 0.05, 0, 1.0)

mask_tk = nn._compiled(src, unlearn.plan_mask(plan_tk, nn.param_count(src)))
mask_rk = nn._compiled(src, unlearn.plan_mask(plan_rk, nn.param_count(src)))
print("top-k lowest layer:", mask_tk.lowest,
      "| per-layer (w_sel, b_sel):",
      [(l[2].size, int(l[1].sum())) for l in mask_tk.layers])
print("random-k lowest layer:", mask_rk.lowest,
      "| per-layer:", [(l[2].size, int(l[1].sum())) for l in mask_rk.layers])

Xb, yb = X_re[:64], y_re[:64]
REP = 2000


def bench(fn, rep=REP):
    fn()  # warm
    t0 = time.perf_counter()
    for _ in range(rep):
        fn()
    return (time.perf_counter() - t0) / rep * 1e6  # us


t_full = bench(lambda: nn.backward(src, Xb, yb))
t_tk = bench(lambda: nn.backward(src, Xb, yb, mask_tk))
t_rk = bench(lambda: nn.backward(src, Xb, yb, mask_rk))
print(f"backward full={t_full:.1f}us  masked-topk={t_tk:.1f}us  masked-randk={t_rk:.1f}us")

ref = nn.forward(src, X_ul)
Xu4, ref4 = X_ul[:4], ref[:4]
t_js4 = bench(lambda: unlearn._js_param_grad(src, Xu4, ref4, mask_tk))
Xu64, ref64 = X_ul[:64], ref[:64]
t_js64 = bench(lambda: unlearn._js_param_grad(src, Xu64, ref64, mask_tk))
print(f"js leg 4-row={t_js4:.1f}us  64-row={t_js64:.1f}us")

params = nn.flatten_params(src)
g = nn.backward(src, Xb, yb).grads
opt = make_optimizer("adam", 1e-3)
t_opt = bench(lambda: optimizer_step(opt, params, g))
t_assign = bench(lambda: nn.assign_params(src, params))
print(f"adam={t_opt:.1f}us  assign={t_assign:.1f}us")

t_fwd_full = bench(lambda: nn.forward(src, X_re), rep=200)
print(f"epoch metrics forward (4750 rows)={t_fwd_full:.1f}us")

n_batches = -(-len(X_re) // 64)
print(f"\nestimated epoch cost (us), {n_batches} batches:")
print(f"  retrain : {n_batches * (t_full + t_opt + t_assign) + 2 * t_fwd_full:.0f}")
print(f"  top-k   : {n_batches * (t_tk + t_js4 + t_opt + t_assign) + 2 * t_fwd_full:.0f}")
print(f"  random-k: {n_batches * (t_rk + t_js4 + t_opt + t_assign) + 2 * t_fwd_full:.0f}")
