# Grid with perf-engineered paths: hidden x batch, measuring wall clock.
import numpy as np

from unlearnlab import nn, data, unlearn, metrics


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


SF = 1.2
ds = make_blobs(10, 500, 32, 0.5, 1234, SF)
cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=250, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)

for hidden in ([32, 24], [64, 48]):
    sources = {}
    for seed in range(5):
        net0 = nn.init_random([32] + hidden + [10], seed=seed)
        src, _, _ = unlearn.train_source(net0, ds, cfg_train, seed=seed)
        sources[seed] = src
    tr_acc = [metrics.accuracy(sources[s], ds.features, ds.labels) for s in range(5)]
    print(f"\n### hidden={hidden} N={nn.param_count(sources[0])} "
          f"train={['%.4f' % a for a in tr_acc]}")
    for bs in (64, 128):
        for ratio in (0.05, 0.2):
            rt = {}
            for seed in range(5):
                sp = data.split(ds, ratio, seed)
                bcfg = unlearn.UnlearnConfig(lam=0.0, learning_rate=1e-3,
                                             patience=3, min_delta=0.002,
                                             batch_size=bs)
                rt[seed] = unlearn.run_baseline("retrain", sources[seed], ds, sp,
                                                bcfg, seed=seed)
            rt_pe = [rt[s].wall_time_s / rt[s].epochs_run for s in range(5)]
            for strat, eps in (("top-k", 1.0), ("random-k", 1.0)):
                b, a, re_, ep_, warm = [], [], [], [], []
                accel, pe_ratio = [], []
                for seed in range(5):
                    src = sources[seed]
                    sp = data.split(ds, ratio, seed)
                    X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
                    X_re, y_re = ds.features[sp.remain_indices], ds.labels[sp.remain_indices]
                    b.append(metrics.accuracy(src, X_ul, y_ul))
                    if strat == "top-k":
                        probe = unlearn.pick_sensitivity_sample(ds, seed)
                        sens = unlearn.sensitivity(src, ds.features[probe:probe+1],
                                                   ds.labels[probe:probe+1])
                        plan = unlearn.select_top_k(sens, 45, eps)
                    else:
                        plan = unlearn.select_random_k(nn.param_count(src), 0.05,
                                                       seed, eps)
                    store = nn.ParameterStore.from_network(src)
                    pn = src.copy(); unlearn.perturb(store, plan).apply_to(pn)
                    warm.append(nn.cross_entropy(pn, X_re, y_re)
                                <= nn.cross_entropy(
                                    nn.init_random(src.dims(), seed + 1000), X_re, y_re))
                    ucfg = unlearn.UnlearnConfig(epsilon=eps, patience=3,
                                                 min_delta=0.002, batch_size=bs)
                    out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=seed)
                    a.append(out.acc_ul); re_.append(out.acc_re); ep_.append(out.epochs_run)
                    accel.append(rt[seed].wall_time_s / out.wall_time_s)
                    pe_ratio.append((out.wall_time_s / out.epochs_run) / rt_pe[seed])
                med_b, med_a = np.median(b), np.median(a)
                print(f"  bs={bs} r={ratio:4} {strat:9s}: {med_b:.4f}->{med_a:.4f} "
                      f"{'DROP' if med_a < med_b else 'FLAT'} "
                      f"n={sum(1 for x, y in zip(a, b) if x < y)}/5 "
                      f"re={np.median(re_):.3f} warm={all(warm)} "
                      f"ep={ep_} rt_ep={[rt[s].epochs_run for s in range(5)]} "
                      f"accel={['%.2f' % x for x in accel]} "
                      f"pe_ratio={['%.2f' % x for x in pe_ratio]}")
