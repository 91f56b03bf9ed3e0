"""Channel attack strategies that plug into the round engine.

An attack object exposes four hooks, all optional in the sense that the
base class provides do-nothing implementations:

``intercept(world, round_index, rngs)``
    Called while the transit qubits travel from Alice to the receivers.
    Returns ``(world, to_bob, to_charlie)`` where the two labels name
    the qubits actually delivered (an attacker may substitute its own).
    Any measurement the attacker performs draws from ``rngs.attack``.

``sync_hadamard(world)``
    Called whenever the parties apply the public between-round Hadamard
    layer of the alternating variant, so an attacker can keep entangled
    probes in step with the carrier.

``bob_decode(world, coin, target, rngs)``
    Only consulted when ``controls_bob`` is true: replaces Bob's entire
    decode step and returns ``(world, announced_bit, records)``.

``take_round_notes()``
    Drains the attacker-side bookkeeping for the round just played; the
    engine stores it on the transcript as ``eve_notes`` (never
    serialized).

Classical choices an attacker makes (substitute bits, forged
announcements) come from the attack's own ``coins`` generator, kept
separate from the quantum streams so that branch enumeration treats
them as fixed inputs rather than quantum forks.
"""

from __future__ import annotations

import numpy as np

from .protocol import W1, W2
from .qsim import MeasurementRecord, PureState, apply_cnot, apply_h, basis_state, discard, measure, prepare_pair_qbar, tensor


class ChannelAttack:
    """Base class: a passive channel that delivers qubits untouched."""

    name = "none"
    controls_bob = False

    def __init__(self, coins: np.random.Generator | None = None) -> None:
        self.coins = coins if coins is not None else np.random.default_rng(0)
        self.inferred: list[tuple[int, int, str]] = []
        # Measurements performed inside intercept hooks land here so the
        # branch enumerator can fold their Born weights into branch
        # probabilities (decode-side measurements ride on transcripts).
        self.records: list[MeasurementRecord] = []
        self._notes: dict | None = None

    def sync_hadamard(self, world: PureState) -> PureState:
        return world

    def intercept(self, world: PureState, round_index: int, rngs) -> tuple[PureState, str, str]:
        return world, W1, W2

    def bob_decode(self, world: PureState, coin: int, target: str | None, rngs):
        raise NotImplementedError("this strategy does not control Bob")

    def take_round_notes(self) -> dict | None:
        notes, self._notes = self._notes, None
        return notes


class A1Attack(ChannelAttack):
    """Single persistent probe copied from the first transit qubit.

    Every round Eve CNOTs the qubit bound for Bob onto one ancilla she
    keeps in her lab.  Against basis-encoded rounds this would read out
    the payload bit; against the coin-flip variant it entangles her
    probe with the carrier, which shows up as decode errors in later
    Hadamard rounds and gets her caught by the check phase.
    """

    name = "a1"

    def __init__(self, coins: np.random.Generator | None = None) -> None:
        super().__init__(coins)
        self._probe_live = False

    def intercept(self, world, round_index, rngs):
        if not self._probe_live:
            world = tensor(world, basis_state([("e", 0)]))
            self._probe_live = True
        world = apply_cnot(world, W1, "e")
        self._notes = {"action": "copied transit qubit onto probe e"}
        return world, W1, W2


class A2ProbeAttack(ChannelAttack):
    """Like ``A1Attack`` but copies both transit qubits onto the probe.

    The probe then records the XOR of the pair, which for the entangled
    encoding is the secret; against the coin-flip variant the leftover
    entanglement again produces detectable errors.
    """

    name = "a2-probe"

    def __init__(self, coins: np.random.Generator | None = None) -> None:
        super().__init__(coins)
        self._probe_live = False

    def intercept(self, world, round_index, rngs):
        if not self._probe_live:
            world = tensor(world, basis_state([("e", 0)]))
            self._probe_live = True
        world = apply_cnot(world, W1, "e")
        world = apply_cnot(world, W2, "e")
        self._notes = {"action": "copied both transit qubits onto probe e"}
        return world, W1, W2


class A2Attack(ChannelAttack):
    """Full eavesdropping schedule against the alternating variant.

    Eve builds two ancillas during the first two rounds, keeps them in
    step with the public Hadamard layers, and from round 3 on extracts
    every secret relative to the first two:

    * round 1: copy the transit qubit onto ``e1``;
    * round 2: copy both transit qubits onto ``e2``, then couple ``e1``
      back into the channel;
    * odd rounds from 3: couple both ancillas into both transit qubits,
      measure the first (the outcome is ``q_n XOR q_1``, deterministic),
      then undo the ``e1`` couplings so the receivers decode cleanly;
    * even rounds from 4: couple ``e2`` in, measure both transit qubits
      (their XOR is ``q_n XOR q_2``), and hand the receivers a fresh
      correlated pair carrying that XOR so their decode still works.

    The receivers see no errors at any point; two announced secrets of
    opposite round parity then unlock the whole session (see
    ``eve_reconstruct``).
    """

    name = "a2"

    def __init__(self, coins: np.random.Generator | None = None) -> None:
        super().__init__(coins)
        self._live: list[str] = []
        self._next_round = 1

    def sync_hadamard(self, world):
        for lab in self._live:
            world = apply_h(world, lab)
        return world

    def intercept(self, world, round_index, rngs):
        if round_index != self._next_round:
            raise ValueError(
                f"a2 schedule must see every round in order; expected round "
                f"{self._next_round}, got {round_index}"
            )
        self._next_round += 1

        if round_index == 1:
            world = tensor(world, basis_state([("e1", 0)]))
            self._live.append("e1")
            world = apply_cnot(world, W1, "e1")
            self._notes = {"action": "installed probe e1"}
        elif round_index == 2:
            world = tensor(world, basis_state([("e2", 0)]))
            self._live.append("e2")
            world = apply_cnot(world, W1, "e2")
            world = apply_cnot(world, W2, "e2")
            world = apply_cnot(world, "e1", W1)
            self._notes = {"action": "installed probe e2"}
        elif round_index % 2 == 1:
            world = apply_cnot(world, "e1", W1)
            world = apply_cnot(world, "e2", W1)
            world = apply_cnot(world, "e1", W2)
            world = apply_cnot(world, "e2", W2)
            rec, world = measure(world, W1, rngs.attack)
            self.records.append(rec)
            self.inferred.append((round_index, rec.outcome, "xor_with_round1_secret"))
            world = apply_cnot(world, "e1", W1)
            world = apply_cnot(world, "e1", W2)
            self._notes = {"inferred_value": rec.outcome, "relative_to_round": 1}
        else:
            world = apply_cnot(world, "e2", W1)
            rec1, world = measure(world, W1, rngs.attack)
            rec2, world = measure(world, W2, rngs.attack)
            self.records += [rec1, rec2]
            value = rec1.outcome ^ rec2.outcome
            self.inferred.append((round_index, value, "xor_with_round2_secret"))
            world = discard(world, W1)
            world = discard(world, W2)
            world = tensor(world, prepare_pair_qbar(value))
            world = apply_cnot(world, "e2", W1)
            world = apply_cnot(world, "e1", W1)
            self._notes = {"inferred_value": value, "relative_to_round": 2, "substituted_pair": value}
        return world, W1, W2


class DishonestBobAttack(ChannelAttack):
    """Bob intercepts both transit qubits and cheats Charlie.

    Each round he keeps the real pair, forwards a substitute basis qubit
    ``|q2p>`` to Charlie, and decodes alone:

    * single encoding: holding both halves he recovers the secret
      exactly, then announces ``secret XOR q2p`` so Charlie's
      reconstruction still comes out right when Charlie measures the
      substitute directly (target ``w1`` rounds).  When the announced
      target is ``w2`` Charlie CNOTs from his carrier qubit first, which
      scrambles the reconstruction to ``secret XOR c``: wrong half the
      time, and his measurement of an entangled substitute also breaks
      the carrier.
    * entangled pair: without Alice's carrier qubit the pair is
      undecodable alone, so he learns nothing and bluffs a coin flip.
    """

    name = "dishonest-bob"
    controls_bob = True

    def __init__(self, coins: np.random.Generator | None = None) -> None:
        super().__init__(coins)
        self._sub: tuple[int, int] | None = None
        self._round = 0

    def intercept(self, world, round_index, rngs):
        b1 = int(self.coins.integers(0, 2))
        b2 = int(self.coins.integers(0, 2))
        self._sub = (b1, b2)
        self._round = round_index
        world = tensor(world, basis_state([("w1p", b1), ("w2p", b2)]))
        return world, W1, "w2p"

    def bob_decode(self, world, coin, target, rngs):
        if self._sub is None:
            raise ValueError("bob_decode called before intercept")
        q2p = self._sub[1]
        records: list[MeasurementRecord] = []
        if coin:
            world = apply_h(world, "b")
        if target is None:
            # Entangled pair: his lone decode collapses junk.
            world = apply_cnot(world, "b", W1)
            rec1, world = measure(world, W1, rngs.attack)
            rec2, world = measure(world, W2, rngs.attack)
            records += [rec1, rec2]
            inferred: int | None = None
            announced = int(self.coins.integers(0, 2))
        elif target == W1:
            world = apply_cnot(world, "b", W1)
            rec1, world = measure(world, W1, rngs.attack)
            rec2, world = measure(world, W2, rngs.attack)
            records += [rec1, rec2]
            inferred = rec1.outcome ^ rec2.outcome
            announced = inferred ^ q2p
        else:
            rec1, world = measure(world, W1, rngs.attack)
            world = apply_cnot(world, "b", W2)
            rec2, world = measure(world, W2, rngs.attack)
            records += [rec1, rec2]
            inferred = rec1.outcome ^ rec2.outcome
            announced = inferred ^ q2p
        if inferred is not None:
            self.inferred.append((self._round, inferred, "secret"))
        self._notes = {"inferred_secret": inferred, "substitute_bits": self._sub}
        self._sub = None
        return world, announced, records


def eve_reconstruct(
    inferred: list[tuple[int, int, str]], announced: dict[int, int]
) -> tuple[dict[int, int], tuple[str, ...]]:
    """Turn relative inferences plus announced secrets into guesses.

    ``inferred`` holds ``(round, value, meaning)`` triples as produced
    by the attacks; ``announced`` maps round index to publicly revealed
    secret bits (check phase announcements).  Values with meaning
    ``xor_with_round1_secret`` need any announced odd-class round to
    anchor them, ``xor_with_round2_secret`` any even-class one, and
    meaning ``secret`` is already absolute.  Returns ``(guesses,
    missing)`` where ``missing`` names anchor classes that could not be
    resolved.
    """
    guesses = {int(r): int(v) for r, v in announced.items()}
    rel1 = {r: v for r, v, meaning in inferred if meaning == "xor_with_round1_secret"}
    rel2 = {r: v for r, v, meaning in inferred if meaning == "xor_with_round2_secret"}
    for r, v, meaning in inferred:
        if meaning == "secret":
            guesses.setdefault(r, v)

    q1 = guesses.get(1)
    if q1 is None:
        for r, v in rel1.items():
            if r in guesses:
                q1 = guesses[r] ^ v
                break
    q2 = guesses.get(2)
    if q2 is None:
        for r, v in rel2.items():
            if r in guesses:
                q2 = guesses[r] ^ v
                break

    missing = []
    if q1 is not None:
        guesses.setdefault(1, q1)
        for r, v in rel1.items():
            guesses.setdefault(r, v ^ q1)
    elif rel1:
        missing.append("odd-class anchor")
    if q2 is not None:
        guesses.setdefault(2, q2)
        for r, v in rel2.items():
            guesses.setdefault(r, v ^ q2)
    elif rel2:
        missing.append("even-class anchor")
    return guesses, tuple(missing)


STRATEGIES = ("none", "a1", "a2", "a2-probe", "dishonest-bob")


def build_attack(strategy: str, coins: np.random.Generator | None = None) -> ChannelAttack | None:
    """Instantiate a strategy by name; ``"none"`` maps to ``None``."""
    if strategy == "none":
        return None
    if strategy == "a1":
        return A1Attack(coins)
    if strategy == "a2":
        return A2Attack(coins)
    if strategy == "a2-probe":
        return A2ProbeAttack(coins)
    if strategy == "dishonest-bob":
        return DishonestBobAttack(coins)
    raise ValueError(f"unknown strategy {strategy!r}; known: {', '.join(STRATEGIES)}")
