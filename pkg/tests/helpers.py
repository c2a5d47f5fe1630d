"""Small builders shared by the test modules."""
import numpy as np

from bridgepoint.model import HYPER_NAMES, Legislator, ModelState, RollCallData, Vote


def toy_data(votes, group, anchors=(0, 1)):
    votes = np.asarray(votes, dtype=np.int8)
    legs = [Legislator(id=f"L{i}", name=f"Leg {i}", party="D" if i % 2 else "R") for i in range(votes.shape[0])]
    return RollCallData(votes, np.asarray(group, dtype=np.int8), legs, anchors[0], anchors[1],
                        [f"M{j}" for j in range(votes.shape[1])])


def oracle_instance():
    """The fixed 4 x 3 instance used by the conditional oracles."""
    votes = [[1, 0, 1],
             [0, 1, 0],
             [1, 1, 0],
             [0, 1, 1]]
    return toy_data(votes, [0, 1, 1], anchors=(1, 3))


def random_data(rng, n_leg, n_mot, missing_rate=0.0):
    """Random votes with both groups present and no empty rows/columns."""
    votes = (rng.random((n_leg, n_mot)) < 0.5).astype(np.int8)
    if missing_rate > 0:
        votes[rng.random(votes.shape) < missing_rate] = Vote.MISSING
        votes[:, 0] = np.where(votes[:, 0] == Vote.MISSING, 1, votes[:, 0])
        votes[0, :] = np.where(votes[0, :] == Vote.MISSING, 0, votes[0, :])
    group = (rng.random(n_mot) < 0.5).astype(np.int8)
    group[0], group[-1] = 0, 1
    neg, pos = rng.choice(n_leg, 2, replace=False)
    return toy_data(votes, group, anchors=(int(neg), int(pos)))


def random_state(rng, data, link="probit"):
    """An arbitrary (not necessarily pinned) state of matching shape."""
    I, J = data.votes.shape
    alpha = rng.normal(0, 2, J)
    is_zero = rng.random(J) < 0.3
    alpha[is_zero] = 0.0
    zeta = rng.random(I) < 0.5
    zeta[rng.choice(I, 2, replace=False)] = True
    beta0 = rng.normal(0, 1.5, I)
    beta1 = np.where(zeta, beta0, rng.normal(0, 1.5, I))
    hypers = np.array([0.3, 1.2, 0.1, 0.8, -0.2, 0.9])
    assert hypers.size == len(HYPER_NAMES)
    latent = rng.random((I, J)) + 0.1 if link == "logit" else rng.normal(size=(I, J))
    imputed = rng.random((I, J)) < 0.5
    return ModelState(mu=rng.normal(0, 1, J), alpha=alpha, is_zero=is_zero, beta0=beta0, beta1=beta1,
                      zeta=zeta, latent=latent, hypers=hypers, imputed=imputed)
