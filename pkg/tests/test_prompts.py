import pytest

from src.agent.prompts import (
    render_analysis_prompt,
    render_confidence_prompt,
    template_fields,
    validate_template,
)
from src.errors import PromptTemplateError
from src.types import DatasetMetadata

METADATA = DatasetMetadata(question="Are referees more likely to give red cards to dark-skinned players?", dataset_name="soccer")


def test_analysis_prompt_names_the_files_and_the_answer_keys():
    prompt = render_analysis_prompt(METADATA, "soccer", "/runs/soccer_r000")

    assert "`soccer.csv'" in prompt
    assert "`/runs/soccer_r000' subdirectory" in prompt
    assert 'stored under the key "response"' in prompt
    assert "`conclusion.txt'" in prompt
    assert "Likert scale from 0 to 100" in prompt
    assert prompt.rstrip().endswith(METADATA.question)


def test_packages_note_is_appended_to_the_packages_sentence():
    plain = render_analysis_prompt(METADATA, "soccer", "/w")
    noted = render_analysis_prompt(METADATA, "soccer", "/w", packages_note="statsmodels is preinstalled.")

    assert "versions) to help with your analysis.\n" in plain
    assert "to help with your analysis. statsmodels is preinstalled.\n" in noted


def test_confidence_prompt():
    prompt = render_confidence_prompt(METADATA, "soccer", "/w")

    assert "`confidence.txt'" in prompt
    assert "more positive (larger on the Likert scale)" in prompt
    assert 'stored under the key "confidence"' in prompt
    assert "You are NOT to run any analyses of your own" in prompt


def test_custom_templates_may_only_use_known_placeholders():
    custom = "Read {dataset_name}.csv in {subdirectory_path}: {question}"
    assert render_analysis_prompt(METADATA, "soccer", "/w", template=custom) == (
        "Read soccer.csv in /w: " + METADATA.question
    )
    assert template_fields(custom) == {"dataset_name", "subdirectory_path", "question"}

    with pytest.raises(PromptTemplateError, match="model_name"):
        validate_template("Use {model_name} on {dataset_name}")
    with pytest.raises(PromptTemplateError):
        render_analysis_prompt(METADATA, "soccer", "/w", template="broken {")
