"""Small hand-written schemas and datasets shared by the tests."""

SUBP = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf"
SUBC = "http://www.w3.org/2000/01/rdf-schema#subClassOf"
RANGE = "http://www.w3.org/2000/01/rdf-schema#range"
DISJ = "http://www.w3.org/2002/07/owl#disjointWith"

FIG2_SCHEMA = f"""<pb> <{SUBP}> <pa> .
<pc> <{SUBP}> <pa> .
<pd> <{SUBP}> <pc> .
<pe> <{SUBP}> <pc> .
"""

FIG2_DATA = """<a> <pa> <b> .
<c> <pc> <d> .
<e> <pb> <f> .
<a> <pf> <d> .
<g> <pe> <h> .
"""

# pb's range and the ClassA hierarchy used for the type-join SQL
EX2_SCHEMA = FIG2_SCHEMA + f"""<pb> <{RANGE}> <ClassA> .
<ClassB> <{SUBC}> <ClassA> .
<ClassC> <{SUBC}> <ClassA> .
<ClassC> <{DISJ}> <ClassB> .
"""

MED = "http://med.test/"

MED_SCHEMA = f"""<{MED}diseaseContraIndication> <{SUBP}> <{MED}contraIndication> .
<{MED}moleculeContraIndication> <{SUBP}> <{MED}contraIndication> .
<{MED}stateContraIndication> <{SUBP}> <{MED}contraIndication> .
<{MED}diseaseContraIndication> <{RANGE}> <{MED}Disease> .
<{MED}Disease> <{SUBC}> <{MED}Top> .
<{MED}Molecule> <{SUBC}> <{MED}Top> .
<{MED}Disease> <{DISJ}> <{MED}Molecule> .
"""

MED_DATA = f"""<{MED}Ibuprofen> <{MED}moleculeContraIndication> <{MED}Ticlopidin> .
<{MED}Ibuprofen> <{MED}moleculeContraIndication> <{MED}Clopidrogel> .
<{MED}Ibuprofen> <{MED}stateContraIndication> <{MED}BreastFeeding> .
<{MED}Ibuprofen> <{MED}stateContraIndication> <{MED}Pregnant> .
<{MED}Ibuprofen> <{MED}diseaseContraIndication> <{MED}HypertensiveHeart> .
<{MED}HypertensiveHeart> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <{MED}Disease> .
"""

MED_PREFIX = f"PREFIX : <{MED}>\n"
