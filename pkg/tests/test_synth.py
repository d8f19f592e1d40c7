import io

import pytest

from cbiou.data_io import write_detections, write_ground_truth
from cbiou.geometry import iou
from cbiou.synth import SceneSpec, generate_scene, parse_scene, scene_ground_truth

from helpers import SCENES

TINY_SCENE = """
frames=5
jitter=0
drop=0
seed=1
object 1: start 1 0 0 10 10
object 1: 2..5 3 0 0 0
object 2: start 2 100 100 8 8
object 2: 3..4 0 1 0 0
"""


class TestParseScene:
    def test_parses_keys_objects_and_segments(self):
        spec = parse_scene(io.StringIO(TINY_SCENE))
        assert spec.frames == 5 and spec.seed == 1
        assert [o.object_id for o in spec.objects] == [1, 2]
        assert spec.objects[0].segments[0].vx == 3
        assert spec.objects[1].start_frame == 2
        assert spec.objects[1].last_frame == 4

    def test_comments_and_blank_lines_ignored(self):
        spec = parse_scene(io.StringIO("# header\nframes=3\n\nobject 1: start 1 0 0 5 5  # note\n"))
        assert spec.frames == 3

    @pytest.mark.parametrize("text", [
        "object 1: start 1 0 0 5 5\n",                       # missing frames=
        "frames=5\nobject 1: 2..3 1 0 0 0\n",                # segment before start
        "frames=5\nobject 1: start 1 0 0 5 5\nobject 1: 3..4 1 0 0 0\n",  # gap
        "frames=5\nobject 1: start 1 0 0 5 5\nobject 1: 2..9 1 0 0 0\n",  # past end
        "frames=5\nwhat is this\n",
    ])
    def test_bad_scripts_rejected(self, text):
        with pytest.raises(ValueError):
            parse_scene(io.StringIO(text))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SceneSpec(frames=0)
        with pytest.raises(ValueError):
            SceneSpec(frames=5, drop=1.0)


class TestGroundTruth:
    def test_piecewise_linear_positions(self):
        spec = parse_scene(io.StringIO(TINY_SCENE))
        gt = scene_ground_truth(spec)
        assert [identity for identity, _ in gt[3]] == [1, 2]
        box1 = dict(gt[3])[1]
        assert (box1.x, box1.y) == (6.0, 0.0)
        box2 = dict(gt[4])[2]
        assert (box2.x, box2.y) == (100.0, 102.0)

    def test_objects_absent_outside_their_life(self):
        spec = parse_scene(io.StringIO(TINY_SCENE))
        gt = scene_ground_truth(spec)
        assert [identity for identity, _ in gt[1]] == [1]
        assert [identity for identity, _ in gt[5]] == [1]


class TestGenerateScene:
    def test_noise_free_detections_equal_ground_truth(self):
        spec = parse_scene(io.StringIO(TINY_SCENE))
        detections, gt = generate_scene(spec)
        for frame, entries in gt.items():
            assert [d.box for d in detections[frame]] == [box for _, box in entries]
            assert all(d.score == 1.0 for d in detections[frame])

    def test_teleport_scene_consecutive_iou_zero(self):
        # displacement 1.2 x width: consecutive gt boxes cannot overlap
        spec = parse_scene(SCENES / "teleport.scene")
        gt = scene_ground_truth(spec)
        for frame in range(1, spec.frames):
            for (i1, b1), (i2, b2) in zip(gt[frame], gt[frame + 1]):
                assert i1 == i2
                assert iou(b1, b2) == 0.0

    def test_same_seed_byte_identical_files(self):
        spec = parse_scene(SCENES / "mixed.scene")

        def render():
            detections, gt = generate_scene(spec)
            det_buffer, gt_buffer = io.StringIO(), io.StringIO()
            write_detections(detections, det_buffer)
            write_ground_truth(gt, gt_buffer)
            return det_buffer.getvalue(), gt_buffer.getvalue()

        assert render() == render()

    def test_different_seed_changes_jittered_scene(self):
        spec = parse_scene(SCENES / "mixed.scene")
        first, _ = generate_scene(spec, seed=1)
        second, _ = generate_scene(spec, seed=2)
        assert first != second

    def test_drop_probability_removes_detections(self):
        spec = SceneSpec(frames=50, drop=0.5, seed=9, objects=parse_scene(
            io.StringIO("frames=50\nobject 1: start 1 0 0 10 10\nobject 1: 2..50 0 0 0 0\n")).objects)
        detections, gt = generate_scene(spec)
        total = sum(len(v) for v in detections.values())
        assert 10 < total < 40  # 50 boxes at drop=0.5

    def test_jitter_moves_boxes(self):
        spec = parse_scene(io.StringIO("frames=2\njitter=2\nseed=4\n"
                                       "object 1: start 1 0 0 10 10\nobject 1: 2..2 0 0 0 0\n"))
        detections, gt = generate_scene(spec)
        assert detections[1][0].box != dict(gt[1])[1]
        assert 0.5 <= detections[1][0].score < 1.0
