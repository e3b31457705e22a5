/*
   Copyright 2026 The phoncl authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

// Bundled default data: the versioned articulatory feature table and the
// default lexicon. Mirrors data/phoneme_features.tsv and data/lexicon.tsv;
// a unit test keeps file and header in sync.

namespace phoncl::data {

inline constexpr const char* kFeatureTableTsv =
    "phoneme	syl	son	cons	cont	delrel	lat	nas	strid	voi	sg	cg	ant	cor	distr	lab	hi	lo	back	round	velaric	tense	long	hitone	hireg\n"
    "p	-1	-1	+1	-1	-1	-1	-1	-1	-1	-1	-1	+1	-1	0	+1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "b	-1	-1	+1	-1	-1	-1	-1	-1	+1	-1	-1	+1	-1	0	+1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "t	-1	-1	+1	-1	-1	-1	-1	-1	-1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "d	-1	-1	+1	-1	-1	-1	-1	-1	+1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "k	-1	-1	+1	-1	-1	-1	-1	-1	-1	-1	-1	-1	-1	0	-1	+1	-1	+1	-1	-1	0	-1	0	0\n"
    "g	-1	-1	+1	-1	-1	-1	-1	-1	+1	-1	-1	-1	-1	0	-1	+1	-1	+1	-1	-1	0	-1	0	0\n"
    "ch	-1	-1	+1	-1	+1	-1	-1	+1	-1	-1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "jh	-1	-1	+1	-1	+1	-1	-1	+1	+1	-1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "f	-1	-1	+1	+1	-1	-1	-1	+1	-1	-1	-1	+1	-1	0	+1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "v	-1	-1	+1	+1	-1	-1	-1	+1	+1	-1	-1	+1	-1	0	+1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "th	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	-1	+1	+1	+1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "dh	-1	-1	+1	+1	-1	-1	-1	-1	+1	-1	-1	+1	+1	+1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "s	-1	-1	+1	+1	-1	-1	-1	+1	-1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "z	-1	-1	+1	+1	-1	-1	-1	+1	+1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "sh	-1	-1	+1	+1	-1	-1	-1	+1	-1	-1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "zh	-1	-1	+1	+1	-1	-1	-1	+1	+1	-1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "h	-1	-1	-1	+1	-1	-1	-1	-1	-1	+1	-1	0	-1	0	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "m	-1	+1	+1	-1	-1	-1	+1	-1	+1	-1	-1	+1	-1	0	+1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "n	-1	+1	+1	-1	-1	-1	+1	-1	+1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "ng	-1	+1	+1	-1	-1	-1	+1	-1	+1	-1	-1	-1	-1	0	-1	+1	-1	+1	-1	-1	0	-1	0	0\n"
    "l	-1	+1	+1	+1	-1	+1	-1	-1	+1	-1	-1	+1	+1	-1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "r	-1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	-1	+1	-1	-1	-1	-1	-1	-1	-1	0	-1	0	0\n"
    "w	-1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	-1	-1	0	+1	+1	-1	+1	+1	-1	0	-1	0	0\n"
    "y	-1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	-1	-1	0	-1	+1	-1	-1	-1	-1	0	-1	0	0\n"
    "iy	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	+1	-1	-1	-1	-1	+1	-1	0	0\n"
    "ih	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	+1	-1	-1	-1	-1	-1	-1	0	0\n"
    "ey	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	-1	-1	-1	-1	+1	-1	0	0\n"
    "eh	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	-1	-1	-1	-1	-1	-1	0	0\n"
    "ae	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	+1	-1	-1	-1	-1	-1	0	0\n"
    "aa	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	+1	+1	-1	-1	-1	-1	0	0\n"
    "ao	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	+1	+1	+1	-1	-1	-1	0	0\n"
    "ow	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	-1	+1	+1	-1	+1	-1	0	0\n"
    "uh	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	+1	-1	+1	+1	-1	-1	-1	0	0\n"
    "uw	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	+1	-1	+1	+1	-1	+1	-1	0	0\n"
    "ah	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	-1	+1	-1	-1	-1	-1	0	0\n"
    "er	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	+1	0	-1	-1	-1	-1	-1	-1	-1	-1	0	0\n"
    "ay	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	+1	-1	-1	-1	+1	-1	0	0\n"
    "aw	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	+1	+1	-1	-1	+1	-1	0	0\n"
    "oy	+1	+1	-1	+1	-1	-1	-1	-1	+1	-1	-1	0	-1	0	-1	-1	+1	+1	+1	-1	+1	-1	0	0\n"
;

inline constexpr const char* kLexiconTsv =
    "beat	1	b iy t\n"
    "bit	1	b ih t\n"
    "bait	1	b ey t\n"
    "bet	1	b eh t\n"
    "bat	1	b ae t\n"
    "pot	1	p aa t\n"
    "bought	0	b ao t\n"
    "boat	1	b ow t\n"
    "book	1	b uh k\n"
    "boot	1	b uw t\n"
    "but	1	b ah t\n"
    "bird	1	b er d\n"
    "bite	1	b ay t\n"
    "bout	0	b aw t\n"
    "boy	1	b oy\n"
    "ship	1	sh ih p\n"
    "measure	0	m eh zh er\n"
    "chip	1	ch ih p\n"
    "judge	0	jh ah jh\n"
    "thin	1	th ih n\n"
    "this	1	dh ih s\n"
    "fan	1	f ae n\n"
    "van	1	v ae n\n"
    "sing	1	s ih ng\n"
    "zoo	1	z uw\n"
    "hat	1	h ae t\n"
    "map	1	m ae p\n"
    "nap	0	n ae p\n"
    "lap	1	l ae p\n"
    "rap	0	r ae p\n"
    "wet	1	w eh t\n"
    "yet	1	y eh t\n"
    "get	1	g eh t\n"
    "kit	1	k ih t\n"
    "dog	1	d ao g\n"
    "top	1	t aa p\n"
    "pen	1	p eh n\n"
    "ten	1	t eh n\n"
    "king	1	k ih ng\n"
    "gas	1	g ae s\n"
    "vote	0	v ow t\n"
    "thaw	0	th ao\n"
    "those	0	dh ow z\n"
    "shoe	1	sh uw\n"
    "chew	0	ch uw\n"
    "joy	1	jh oy\n"
    "hedge	0	h eh jh\n"
    "lose	0	l uw z\n"
    "ring	1	r ih ng\n"
    "wash	1	w aa sh\n"
    "youth	0	y uw th\n"
    "vision	0	v ih zh ah n\n"
    "hurt	0	h er t\n"
    "mouse	1	m aw s\n"
    "point	1	p oy n t\n"
    "fight	0	f ay t\n"
    "loud	0	l aw d\n"
    "coin	0	k oy n\n"
    "tide	0	t ay d\n"
    "power	0	p aw er\n"
    "see	1	s iy\n"
    "team	1	t iy m\n"
    "tape	0	t ey p\n"
    "same	1	s ey m\n"
    "put	1	p uh t\n"
    "wood	1	w uh d\n"
    "piyd	0	p iy d\n"
    "jhaesh	0	jh ae sh\n"
    "shuhb	0	sh uh b\n"
    "rays	0	r ay s\n"
    "kihy	0	k ih y\n"
    "dhaath	0	dh aa th\n"
    "nuwr	0	n uw r\n"
    "bawf	0	b aw f\n"
    "feyng	0	f ey ng\n"
    "zhaoch	0	zh ao ch\n"
    "wahm	0	w ah m\n"
    "goyk	0	g oy k\n"
    "sehzh	0	s eh zh\n"
    "ngowt	0	ng ow t\n"
    "terz	0	t er z\n"
    "viyp	0	v iy p\n"
    "haedh	0	h ae dh\n"
    "yuhw	0	y uh w\n"
    "chayv	0	ch ay v\n"
    "zihl	0	z ih l\n"
    "laajh	0	l aa jh\n"
    "duwn	0	d uw n\n"
    "thawg	0	th aw g\n"
    "meyh	0	m ey h\n"
    "paod	0	p ao d\n"
    "jhahsh	0	jh ah sh\n"
    "shoyb	0	sh oy b\n"
    "rehs	0	r eh s\n"
    "kowy	0	k ow y\n"
    "dherth	0	dh er th\n"
    "niyr	0	n iy r\n"
    "baef	0	b ae f\n"
    "fuhng	0	f uh ng\n"
    "zhaych	0	zh ay ch\n"
    "wihm	0	w ih m\n"
    "gaak	0	g aa k\n"
    "suwzh	0	s uw zh\n"
    "ngawt	0	ng aw t\n"
    "teyz	0	t ey z\n"
    "vaop	0	v ao p\n"
    "hahdh	0	h ah dh\n"
    "yoyw	0	y oy w\n"
    "chehv	0	ch eh v\n"
    "zowl	0	z ow l\n"
    "lerjh	0	l er jh\n"
    "diyn	0	d iy n\n"
    "thaeg	0	th ae g\n"
    "muhh	0	m uh h\n"
    "payd	0	p ay d\n"
    "jhihsh	0	jh ih sh\n"
    "shaab	0	sh aa b\n"
    "ruws	0	r uw s\n"
    "kawy	0	k aw y\n"
    "dheyth	0	dh ey th\n"
    "naor	0	n ao r\n"
    "bahf	0	b ah f\n"
    "foyng	0	f oy ng\n"
    "zhehch	0	zh eh ch\n"
    "wowm	0	w ow m\n"
    "gerk	0	g er k\n"
    "siyzh	0	s iy zh\n"
    "ngaet	0	ng ae t\n"
    "tuhz	0	t uh z\n"
    "vayp	0	v ay p\n"
    "hihdh	0	h ih dh\n"
    "yaaw	0	y aa w\n"
    "chuwv	0	ch uw v\n"
    "zawl	0	z aw l\n"
    "leyjh	0	l ey jh\n"
    "daon	0	d ao n\n"
    "thahg	0	th ah g\n"
    "moyh	0	m oy h\n"
    "pehd	0	p eh d\n"
    "jhowsh	0	jh ow sh\n"
;

}  // namespace phoncl::data
