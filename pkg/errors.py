"""
예외 정의
"""
from typing import Optional


class ImcPackError(Exception):
    """imc-pack 공통 예외"""


class WorkloadParseError(ImcPackError, ValueError):
    """워크로드 문서가 스키마와 맞지 않음"""

    def __init__(self, message: str, field: Optional[str] = None, layer: Optional[str] = None):
        self.field = field
        self.layer = layer
        where = []
        if layer is not None:
            where.append(f"layer '{layer}'")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class WorkloadValidationError(ImcPackError, ValueError):
    """레이어 불변식 위반 (0 이하 차원, 중복 id 등)"""


class ArchitectureError(ImcPackError, ValueError):
    """아키텍처 문서 오류"""


class AllocationError(ImcPackError, ValueError):
    """할당 문서 또는 할당/워크로드 불일치"""


class ActivationBufferOverflow(ImcPackError, ValueError):
    """활성화 버퍼 용량 초과"""


class SearchCeilingExceeded(ImcPackError, RuntimeError):
    """최소 차원 탐색이 상한에 도달"""
