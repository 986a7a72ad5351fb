"""Validator handlers: fast confirmation, proposal processing, vote targets,
merge behavior and the joining schedule."""

from ebbflow.blocks import GENESIS, make_block, make_tx
from ebbflow.messages import Checkpoint, FinVote, GENESIS_CHECKPOINT, ProposeMsg, VoteMsg
from ebbflow.validator import (
    MODE_A,
    MODE_B,
    Validator,
    activation_round,
    fastconfirm_gadget,
    fastconfirm_simple,
    phase_at,
    propose_round,
    slot_of_round,
    vote_round,
)


def make_validator(mode=MODE_B, n=3, delta=1, kappa=2, vid=0, proposer=lambda t: 0):
    return Validator(vid=vid, n=n, delta=delta, kappa=kappa, mode=mode, proposer_of=proposer)


def test_round_clock():
    assert [slot_of_round(r, 1) for r in (0, 3, 4, 11)] == [0, 0, 1, 2]
    assert propose_round(2, 1) == 8 and vote_round(2, 1) == 9
    assert phase_at(8, 1) == ("propose", 2)
    assert phase_at(9, 1) == ("vote", 2)
    assert phase_at(10, 1) == ("fastconfirm", 2)
    assert phase_at(11, 1) == ("merge", 2)
    assert phase_at(13, 2)[0] is None


def test_activation_round_boundaries():
    delta = 1
    # wake exactly at vote(t-1)+delta -> active at vote(t)
    assert activation_round(vote_round(2, delta) + delta, delta) == vote_round(3, delta)
    # wake just after vote(t-2)+delta -> active at vote(t)
    assert activation_round(vote_round(1, delta) + delta + 1, delta) == vote_round(3, delta)
    assert activation_round(vote_round(1, delta) + delta, delta) == vote_round(2, delta)
    # never asleep -> active from the start
    assert activation_round(0, delta) == 0
    # same shape for delta > 1
    d = 3
    assert activation_round(vote_round(4, d) + d, d) == vote_round(5, d)
    assert activation_round(vote_round(4, d) + d + 1, d) == vote_round(6, d)


def test_fastconfirm_simple_examples():
    v = make_validator()
    store = v.store
    assert fastconfirm_simple(store, [], 0, 3) == (GENESIS.id, ())
    chi = store.extend(GENESIS.id, 0, [make_tx("p")])
    votes = [VoteMsg(chi.id, None, 0, i) for i in (0, 1)]
    cand, qc = fastconfirm_simple(store, votes, 0, 3)
    assert cand == chi.id and set(qc) == set(votes)
    # two conflicting children of A: only A reaches the threshold
    b = make_block(chi.id, 1, (make_tx("b"),))
    b2 = make_block(chi.id, 1, (make_tx("b2"),))
    store.insert(b)
    store.insert(b2)
    split = [VoteMsg(b.id, None, 1, 0), VoteMsg(b2.id, None, 1, 1)]
    cand, qc = fastconfirm_simple(store, split, 1, 3)
    assert cand == chi.id and set(qc) == set(split)


def test_fastconfirm_gadget_branches():
    v = make_validator()
    store = v.store
    chi = store.extend(GENESIS.id, 0, [make_tx("x")])
    chi2 = store.extend(chi.id, 1, [make_tx("y")])
    # pass-through when the simple result extends the greatest justified chain
    for i in (0, 1):
        v.receive_vote(VoteMsg(chi.id, None, 0, i), 1)
    cand, qc = fastconfirm_gadget(v.view, 0, 3)
    assert cand == chi.id and len(qc) == 2
    # no quorum but a justified checkpoint: fall back to its chain, empty qc
    for i in (0, 1):
        v.receive_vote(
            VoteMsg(chi2.id, FinVote(GENESIS_CHECKPOINT, Checkpoint(chi.id, 2), i), 2, i),
            2,
        )
    cand, qc = fastconfirm_gadget(v.view, 3, 3)
    assert cand == chi.id and qc == ()
    # conflicting fast candidate loses to the justified chain
    fork = make_block(GENESIS.id, 3, (make_tx("fork"),))
    store.insert(fork)
    for i in (0, 1):
        v.receive_vote(VoteMsg(fork.id, None, 3, i), 3)
    cand, qc = fastconfirm_gadget(v.view, 3, 3)
    assert cand == chi.id and qc == ()


def test_on_propose_cold_start():
    v = make_validator()
    tx = make_tx("t0")
    msg, info = v.on_propose(0, [tx])
    assert msg.slot == 0 and msg.proposer == 0
    assert msg.chain_c == GENESIS.id and msg.qc == ()
    assert msg.gj == GENESIS_CHECKPOINT
    block = v.store.get(msg.chain_p)
    assert block.parent == GENESIS.id and block.slot == 0 and block.body == (tx,)


def test_on_propose_extends_fast_confirmed_chain():
    v = make_validator()
    chi = v.store.extend(GENESIS.id, 0, [make_tx("c")])
    for i in range(3):
        v.receive_vote(VoteMsg(chi.id, None, 0, i), 1)
    msg, info = v.on_propose(1, [])
    assert msg.chain_c == chi.id and len(msg.qc) == 3
    assert v.store.is_prefix(chi.id, msg.chain_p)
    assert v.store.slot_of(msg.chain_p) == 1


def test_mode_a_messages_have_no_finality_fields():
    v = make_validator(mode=MODE_A)
    msg, _ = v.on_propose(0, [])
    assert msg.gj is None
    vote, _ = v.on_vote(0)
    assert vote.fin is None


def test_receive_proposal_window_rule():
    v = make_validator(proposer=lambda t: 1)
    peer = make_validator(vid=1, proposer=lambda t: 1)
    msg, _ = peer.on_propose(0, [])
    v.store.insert(peer.store.get(msg.chain_p))
    late = make_validator(vid=2, proposer=lambda t: 1)
    late.store.insert(peer.store.get(msg.chain_p))
    v.receive_proposal(msg, 1)           # inside [0, vote(0)]
    late.receive_proposal(msg, 2)        # after vote(0): ignored for updates
    assert v._pending.get(0) and not late._pending.get(0)
    vote, _ = v.on_vote(0)
    assert vote.chain == msg.chain_p     # votes for the proposal
    vote_late, _ = late.on_vote(0)
    assert vote_late.chain == GENESIS.id


def test_proposal_guard_rejects_unjustified_gj():
    v = make_validator()
    chi = v.store.extend(GENESIS.id, 0, [make_tx("a")])
    bogus_gj = Checkpoint(chi.id, 1)  # not justified in v's view
    msg = ProposeMsg(chi.id, bogus_gj.chain, (), bogus_gj, 0, 0)
    v.receive_proposal(msg, 0)
    v.on_vote(0)
    assert v.gj_frozen == GENESIS_CHECKPOINT
    assert v.chain_frozen == GENESIS.id


def test_proposal_updates_chain_frozen():
    v = make_validator()
    proposer = make_validator(vid=0)
    chi = proposer.store.extend(GENESIS.id, 0, [make_tx("p")])
    votes = [VoteMsg(chi.id, None, 0, i) for i in range(3)]
    for vote in votes:
        proposer.receive_vote(vote, 1)
        v.receive_vote(vote, 1)
    v.store.insert(proposer.store.get(chi.id))
    msg, _ = proposer.on_propose(1, [])
    v.store.insert(proposer.store.get(msg.chain_p))
    v.receive_proposal(msg, propose_round(1, 1))
    vote, info = v.on_vote(1)
    assert v.chain_frozen == chi.id       # chain_c adopted at the vote round
    assert vote.chain == msg.chain_p


def test_vote_target_branches():
    v = make_validator()
    chi = v.store.extend(GENESIS.id, 0, [make_tx("z")])
    # gj_frozen.c = t-1 -> target is (chain_ava, t)
    v.gj_frozen = Checkpoint(GENESIS.id, 0)
    vote, _ = v.on_vote(1)
    assert vote.fin.source == v.gj_frozen
    assert vote.fin.target == Checkpoint(v.chain_ava, 1)
    # gj_frozen.c < t-1 -> re-justification target (gj_frozen.chain, t)
    vote2, _ = v.on_vote(2)
    assert vote2.fin.target == Checkpoint(GENESIS.id, 2)
    assert vote2.fin.source == Checkpoint(GENESIS.id, 0)


def test_mode_a_fastconfirm_threshold():
    v = make_validator(mode=MODE_A)
    chi = v.store.extend(GENESIS.id, 0, [make_tx("m")])
    v.receive_vote(VoteMsg(chi.id, None, 0, 0), 1)
    v.on_fastconfirm(0)
    assert v.chain_ava == GENESIS.id      # 1 < 2 supporters: unchanged
    v.receive_vote(VoteMsg(chi.id, None, 0, 1), 2)
    v.on_fastconfirm(0)
    assert v.chain_ava == chi.id


def test_mode_b_fastconfirm_jumps_to_gj():
    v = make_validator()
    chi = v.store.extend(GENESIS.id, 0, [make_tx("gj")])
    for i in (0, 1):
        v.receive_vote(
            VoteMsg(chi.id, FinVote(GENESIS_CHECKPOINT, Checkpoint(chi.id, 1), i), 1, i),
            1,
        )
    # stale chain_ava jumps to the greatest justified chain at slot 2
    v.on_fastconfirm(2)
    assert v.chain_ava == chi.id


def test_merge_updates_frozen_state():
    v = make_validator()
    info = v.on_merge(0, 3)
    assert v.chain_frozen == GENESIS.id and v.frozen_cutoff == 3
    chi = v.store.extend(GENESIS.id, 1, [make_tx("w")])
    for i in range(3):
        fin = FinVote(GENESIS_CHECKPOINT, Checkpoint(chi.id, 1), i)
        v.receive_vote(VoteMsg(chi.id, fin, 1, i), 6)
    v.on_merge(1, 7)
    assert v.chain_frozen == chi.id
    assert v.gj_frozen == Checkpoint(chi.id, 1)


def test_proposal_validity_rules():
    v = make_validator(n=3, proposer=lambda t: 2)
    chi = v.store.extend(GENESIS.id, 0, [make_tx("q")])
    ok = ProposeMsg(chi.id, GENESIS.id, (), GENESIS_CHECKPOINT, 0, 2)
    assert v.proposal_valid(ok)
    # wrong proposer
    assert not v.proposal_valid(ProposeMsg(chi.id, GENESIS.id, (), GENESIS_CHECKPOINT, 0, 1))
    # chain_p must sit exactly at the proposal slot
    assert not v.proposal_valid(ProposeMsg(chi.id, GENESIS.id, (), GENESIS_CHECKPOINT, 1, 2))
    # empty qc must anchor chain_c at the announced gj chain
    assert not v.proposal_valid(ProposeMsg(chi.id, chi.id, (), GENESIS_CHECKPOINT, 0, 2))
    # qc must be a supermajority of slot-(t-1) votes extending chain_c
    child = v.store.extend(chi.id, 1, [])
    qc = tuple(VoteMsg(chi.id, None, 0, i) for i in (0, 1))
    good = ProposeMsg(child.id, chi.id, qc, GENESIS_CHECKPOINT, 1, 2)
    assert v.proposal_valid(good)
    small = ProposeMsg(child.id, chi.id, qc[:1], GENESIS_CHECKPOINT, 1, 2)
    assert not v.proposal_valid(small)
    stale = tuple(VoteMsg(chi.id, None, 0, i) for i in (0, 1))
    wrong_slot = ProposeMsg(child.id, chi.id, stale, GENESIS_CHECKPOINT, 2, 2)
    assert not v.proposal_valid(wrong_slot)
