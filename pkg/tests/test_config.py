from __future__ import annotations

from sceneforge.config import DEFAULTS, load_config


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config(None)
        assert cfg == DEFAULTS
        assert cfg is not DEFAULTS  # caller may mutate freely

    def test_section_override_merges(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("[mock]\ncounting_error_rate = 0.3\n\n[generate]\nn_demos = 1\n")
        cfg = load_config(path)
        assert cfg["mock"]["counting_error_rate"] == 0.3
        assert cfg["mock"]["questions_per_scene"] == 6  # untouched default
        assert cfg["generate"]["n_demos"] == 1
        assert cfg["generate"]["temperature"] == 0.7

    def test_relative_paths_resolve_against_config_dir(self, tmp_path):
        (tmp_path / "lex.json").write_text('{"affirmative": [], "negative": [], "refusal": []}')
        path = tmp_path / "run.toml"
        path.write_text('[refiner]\nlexicons = "lex.json"\n')
        cfg = load_config(path)
        assert cfg["refiner"]["lexicons"] == str(tmp_path / "lex.json")

    def test_unknown_sections_pass_through(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("[custom]\nflag = true\n")
        cfg = load_config(path)
        assert cfg["custom"]["flag"] is True
