"""
JSON 문서 로딩 - 번들 이름, 파일 경로, 매핑 모두 지원
"""
import json
from pathlib import Path
from typing import Any, Mapping, Tuple, Type, Union

from .errors import ImcPackError

DATA_DIR = Path(__file__).resolve().parent / "data"

Source = Union[str, Path, Mapping[str, Any]]


def bundled_names(category: str) -> list:
    """번들 문서 이름 목록"""
    return sorted(p.stem for p in (DATA_DIR / category).glob("*.json"))


def bundled_path(category: str, name: str) -> Path:
    return DATA_DIR / category / f"{name}.json"


def read_document(
    source: Source, category: str, error_cls: Type[ImcPackError]
) -> Tuple[Mapping[str, Any], str]:
    """문서를 읽어 (매핑, 출처 문자열) 반환

    문자열은 순서대로 JSON 텍스트('{' 로 시작), 파일 경로, 번들 이름(확장자 무시)으로 해석한다.
    """
    if isinstance(source, Mapping):
        return source, "<mapping>"

    text_source = str(source)
    if isinstance(source, str) and text_source.lstrip().startswith("{"):
        return _loads(text_source, "<string>", error_cls), "<string>"
    path = Path(text_source)
    if not path.exists():
        candidate = bundled_path(category, path.stem)
        if candidate.exists():
            path = candidate
        else:
            raise error_cls(
                f"{text_source}: no such file or bundled {category[:-1]} "
                f"(bundled: {', '.join(bundled_names(category))})"
            )

    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return _loads(text, str(path), error_cls), str(path)


def _loads(text: str, origin: str, error_cls: Type[ImcPackError]) -> Mapping[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise error_cls(f"{origin}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, Mapping):
        raise error_cls(f"{origin}: top-level document must be an object")
    return data
