from dataclasses import dataclass, field
from time import perf_counter
from typing import List, Optional

from gevent import spawn as gevent_spawn
from gevent.queue import Queue as GeventQueue

from asrshrink.corpus import CharVocab, wer
from asrshrink.ctc import ctc_nll, greedy_decode, min_frames
from asrshrink.encoder import ForwardMode, ModeError, layerdrop_schedule, save_checkpoint
from asrshrink.numkit import Tensor, add_all, backward
from asrshrink.trainer.config import TrainConfig
from asrshrink.trainer.optim import Adam
from asrshrink.util.functional import chunks
from asrshrink.util.logging import LoggingClass
from asrshrink.util.rng import generator
from asrshrink.util.serializer import append_record


class DataValidationError(ValueError):
    pass


@dataclass
class Example:
    utterance: object
    target: List[int]
    rows: int
    frames: Optional[Tensor] = None

    @property
    def id(self):
        return self.utterance.id


@dataclass
class PrefetchFailure:
    error: Exception


@dataclass
class ValidationReport:
    kept: int = 0
    rejected: int = 0
    rejected_ids: List[str] = field(default_factory=list)


class Trainer(LoggingClass):
    """
    Fine-tunes a `SpeechEncoder` with CTC. The front-end stays frozen; when
    the adapter has no trainable kernel its output is computed once per
    utterance and reused across epochs.
    """
    def __init__(self, model, cfg=None, vocab=None):
        self.model = model
        self.cfg = TrainConfig(cfg).validate()
        self.vocab = vocab or CharVocab()
        self.records = []
        self.report = ValidationReport()
        self._frames = {}

    def examples(self, utterances):
        """
        Keeps the utterances whose transcript fits the decoder rows the model
        produces for them; rejections are counted and logged.
        """
        report = ValidationReport()
        examples = []
        for u in utterances:
            target = self.vocab.encode(u.transcript)
            rows = self.model.output_rows(len(u.wave))
            if rows < 1 or rows < min_frames(target):
                report.rejected += 1
                report.rejected_ids.append(u.id)
                continue
            examples.append(Example(u, target, rows))

        report.kept = len(examples)
        self.report = report
        if report.rejected:
            self.log.warning('Rejected %d of %d utterances with CTC-infeasible targets (%s)',
                             report.rejected, len(utterances), ', '.join(report.rejected_ids[:5]))
        if not examples:
            raise DataValidationError('none of the {} training utterances is CTC-feasible for this model'.format(
                len(utterances)))
        return examples

    def batches(self, examples, epoch):
        """
        Length-sorted buckets of `batch_size` utterances, visited in a seeded
        order that changes every epoch.
        """
        ordered = sorted(examples, key=lambda e: (e.rows, e.id))
        buckets = list(chunks(ordered, self.cfg.batch_size))
        order = generator(self.cfg.seed, 'batches', epoch).permutation(len(buckets))
        return [buckets[int(i)] for i in order]

    def prepare(self, example):
        if self.model.adapter.trainable:
            return example

        if example.id not in self._frames:
            self._frames[example.id] = self.model.embed(example.utterance.wave)
        example.frames = self._frames[example.id]
        return example

    def prefetch(self, examples):
        """
        Yields prepared examples in order, prepared ahead by a greenlet into
        a bounded queue. A failure while preparing is raised to the consumer
        once the examples before it have been yielded.
        """
        queue = GeventQueue(self.cfg.prefetch)

        def _fill():
            try:
                for example in examples:
                    queue.put(self.prepare(example))
            except Exception as e:
                queue.put(PrefetchFailure(e))
            finally:
                queue.put(StopIteration)

        gevent_spawn(_fill)
        while True:
            item = queue.get()
            if item is StopIteration:
                break
            if isinstance(item, PrefetchFailure):
                raise item.error
            yield item

    def frames(self, example):
        if example.frames is not None:
            return example.frames
        return self.model.embed(example.utterance.wave)

    def loss(self, example, layers, kept=None):
        """
        Sum over `layers` of the CTC loss of their decoder, divided by the
        number of decoder rows.
        """
        outputs = self.model.exit_log_probs(self.frames(example), layers, kept)
        total = add_all(ctc_nll(outputs[layer], example.target) for layer in layers)
        return total * (1.0 / example.rows)

    def train_epoch(self, examples, epoch, layers, optimizer):
        total, steps = 0.0, 0
        for batch_index, batch in enumerate(self.batches(examples, epoch)):
            optimizer.zero_grad()
            for i, example in enumerate(self.prefetch(batch)):
                kept = None
                if self.cfg.layerdrop > 0:
                    kept = layerdrop_schedule(self.model.num_layers, self.cfg.layerdrop, self.cfg.seed,
                                              epoch, batch_index, i)
                loss = self.loss(example, layers, kept)
                backward(loss * (1.0 / len(batch)))
                total += loss.item()
                steps += 1
            optimizer.step()
        return total / max(steps, 1)

    def transcribe(self, utterances, layer=None):
        layer = layer or self.model.num_layers
        hyps = []
        for u in utterances:
            frames = self._frames.get(u.id)
            if frames is None:
                frames = self.model.embed(u.wave)
            if layer == self.model.num_layers:
                probs = self.model.forward(frames, ForwardMode.full()).probs
            else:
                outputs, _ = self.model.walk(frames, layer)
                probs = self.model.decode_head(outputs[layer], layer)
            hyps.append(greedy_decode(probs, self.vocab))
        return hyps

    def evaluate(self, utterances, layers=None):
        """
        Greedy dev WER, averaged over the decoders at `layers` (default: the
        final decoder).
        """
        if not utterances:
            return None
        layers = layers or [self.model.num_layers]
        refs = [u.transcript for u in utterances]
        return sum(wer(refs, self.transcribe(utterances, layer)) for layer in layers) / float(len(layers))

    def fit(self, train, dev, layers, phase='finetune'):
        """
        Runs up to `epochs` epochs on the decoders at `layers`, stopping
        early when dev WER stalls for `patience` epochs. The best parameters
        (by dev WER) are restored at the end.
        """
        examples = self.examples(train)
        params = self.model.trainable_parameters()
        optimizer = Adam(params, self.cfg.lr, self.cfg.betas, self.cfg.eps)

        best = self.evaluate(dev, layers)
        best_state = self.model.state_dict()
        self.record(phase, 0, None, best, 0.0)
        stale = 0

        for epoch in range(1, self.cfg.epochs + 1):
            started = perf_counter()
            train_loss = self.train_epoch(examples, epoch, layers, optimizer)
            dev_wer = self.evaluate(dev, layers)
            self.record(phase, epoch, train_loss, dev_wer, perf_counter() - started)

            if dev_wer is None or best is None or dev_wer < best:
                best, best_state, stale = dev_wer, self.model.state_dict(), 0
                continue

            stale += 1
            if self.cfg.patience and stale >= self.cfg.patience:
                self.log.info('%s: stopping after epoch %d, dev WER has not improved for %d epochs',
                              phase, epoch, stale)
                break

        self.model.load_state_dict(best_state)
        return self.model

    def record(self, phase, epoch, train_loss, dev_wer, seconds):
        record = {
            'phase': phase,
            'epoch': epoch,
            'train_loss': train_loss,
            'dev_wer': dev_wer,
            'wall_seconds': seconds,
        }
        self.records.append(record)
        if self.cfg.log_path:
            append_record(self.cfg.log_path, record)

        self.log.info('%s epoch %d: train loss %s, dev WER %s (%.2fs)', phase, epoch,
                      'n/a' if train_loss is None else '{:.4f}'.format(train_loss),
                      'n/a' if dev_wer is None else '{:.4f}'.format(dev_wer), seconds)
        return record

    def save(self):
        if self.cfg.checkpoint_path:
            save_checkpoint(self.model, self.cfg.checkpoint_path, strategy=self.cfg.strategy, log=self.records)


def finetune(model, train_set, dev_set, cfg=None, vocab=None):
    """
    Standard fine-tuning (optionally multi-exit). Returns (model, epoch log).
    """
    cfg = TrainConfig(cfg)
    if cfg.two_step:
        return finetune_two_step(model, train_set, dev_set, cfg, vocab)

    trainer = Trainer(model, cfg, vocab)
    layers = sorted(model.decoders) if trainer.cfg.multi_exit else [model.num_layers]
    trainer.fit(train_set, dev_set, layers)
    trainer.save()
    return model, trainer.records


def finetune_two_step(model, train_set, dev_set, cfg=None, vocab=None):
    """
    Phase 1 trains the encoder and the final decoder; phase 2 freezes all
    of them and trains the exit decoders of layers first_exit..L-1.
    """
    trainer = Trainer(model, cfg, vocab)
    taps = sorted(model.exit_decoders())
    if not taps:
        raise ModeError('two-step training needs exit decoders, the model has none')

    trainer.fit(train_set, dev_set, [model.num_layers], phase='encoder')

    model.freeze()
    for layer in taps:
        model.decoders[layer].unfreeze()
    try:
        trainer.fit(train_set, dev_set, taps, phase='exits')
    finally:
        model.unfreeze()
        model.frontend.freeze()

    trainer.save()
    return model, trainer.records
